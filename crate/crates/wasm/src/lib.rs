//! Browser bindings for a few fracnull operations.

use fracnull::calculus::{conformable_derivative, conformable_derivative_limit, FractionalOrder, ScalarFunction};
use fracnull::control::{synthesize_control, ControlHorizon, ControlSignal, Propagator};
use fracnull::spectral::{EvolutionSystem, SpectralState};
use wasm_bindgen::prelude::*;

fn js(e: fracnull::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn system(alpha: f64, potential: f64, modes: usize, zeta: f64, t_end: f64) -> Result<EvolutionSystem, JsError> {
    let order = FractionalOrder::new(alpha).map_err(js)?;
    EvolutionSystem::new(order, modes, ScalarFunction::constant(potential), zeta, t_end).map_err(js)
}

/// `Ψ(t, ζ)` for modes `1..=modes` at `points` times spread over `[ζ, t_end]`.
/// Row-major: one row of `modes + 1` values `(t, Ψ_1, .., Ψ_N)` per time.
#[wasm_bindgen]
pub fn evolution_curves(
    alpha: f64,
    potential: f64,
    modes: usize,
    zeta: f64,
    t_end: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let sys = system(alpha, potential, modes, zeta, t_end)?;
    let points = points.max(2);
    let mut out = Vec::with_capacity(points * (modes + 1));
    for k in 0..points {
        let t = zeta + (t_end - zeta) * k as f64 / (points - 1) as f64;
        out.push(t);
        for n in 1..=modes {
            out.push(sys.evolution_factor(n, t, zeta).map_err(js)?);
        }
    }
    Ok(out)
}

/// Minimum-norm control steering `x0` (sine coefficients) to zero.
#[wasm_bindgen]
pub struct NullControlRun {
    times: Vec<f64>,
    state_norms: Vec<f64>,
    control_norms: Vec<f64>,
    final_norm: f64,
    control_energy: f64,
}

#[wasm_bindgen]
impl NullControlRun {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn state_norms(&self) -> Vec<f64> {
        self.state_norms.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn control_norms(&self) -> Vec<f64> {
        self.control_norms.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn final_norm(&self) -> f64 {
        self.final_norm
    }

    #[wasm_bindgen(getter)]
    pub fn control_energy(&self) -> f64 {
        self.control_energy
    }
}

#[wasm_bindgen]
pub fn null_control(
    alpha: f64,
    potential: f64,
    zeta: f64,
    t_end: f64,
    x0: Vec<f64>,
    nodes: usize,
) -> Result<NullControlRun, JsError> {
    let modes = x0.len().max(1);
    let sys = system(alpha, potential, modes, zeta, t_end)?;
    let horizon = ControlHorizon::for_system(&sys, nodes).map_err(js)?;
    let prop = Propagator::new(&sys, &horizon).map_err(js)?;
    let mut coeffs = x0;
    coeffs.resize(modes, 0.0);
    let z0 = SpectralState::new(coeffs);
    let zero = ControlSignal::zeros(modes, prop.nodes());
    let u = synthesize_control(&prop, &z0, &zero).map_err(js)?;
    let states = prop.propagate(&z0, &u).map_err(js)?;
    let control_norms = (0..prop.nodes()).map(|k| u.at_node(k).norm()).collect();
    Ok(NullControlRun {
        times: horizon.grid().nodes().to_vec(),
        state_norms: states.iter().map(SpectralState::norm).collect(),
        control_norms,
        final_norm: states.last().map_or(f64::NAN, SpectralState::norm),
        control_energy: prop.signal_norm(&u).map_err(js)?,
    })
}

/// `[analytic, limit quotient]` for `T_α f(t)` with base 0, where `f` has
/// polynomial coefficients `coeffs` (constant term first).
#[wasm_bindgen]
pub fn conformable_derivative_pair(alpha: f64, coeffs: Vec<f64>, t: f64, epsilon: f64) -> Result<Vec<f64>, JsError> {
    let order = FractionalOrder::new(alpha).map_err(js)?;
    let f = ScalarFunction::polynomial(coeffs);
    let analytic = conformable_derivative(&f, order, t, 0.0).map_err(js)?;
    let limit = conformable_derivative_limit(&f, order, t, 0.0, epsilon).map_err(js)?;
    Ok(vec![analytic, limit])
}
