//! Direct time stepping of `dz_n/dτ = −(n² + p(t(τ))) z_n + u_n + h_n`,
//! the transformed-time form of `T_α z + A(t)z = u + h`.
//!
//! Used as an oracle: it never touches the evolution factors or the panel
//! weights of [`Propagator`], only the interpolated signals.

use super::{ControlSignal, Propagator};
use crate::calculus::Differentiable;
use crate::error::Result;
use crate::spectral::SpectralState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Upper bound on `|λ| Δτ` per RK4 substep, `λ = n² + p`.
    pub stiffness_step: f64,
    pub min_substeps: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            stiffness_step: 0.02,
            min_substeps: 4,
        }
    }
}

/// Final state at `t₂` of the linear system driven by `u + h` from `z0`,
/// integrated with classical RK4 in transformed time.
pub fn simulate_linear(
    prop: &Propagator,
    z0: &SpectralState,
    h: &ControlSignal,
    u: &ControlSignal,
    options: SimulationOptions,
) -> Result<SpectralState> {
    prop.check_state(z0)?;
    let forcing = h.axpy(1.0, u)?;
    prop.check_signal(&forcing)?;
    let sys = prop.system();
    let order = sys.order();
    let grid = prop.horizon().grid();
    let tau = grid.transformed();
    let potential = sys.potential();
    let p_bound = potential.abs_bound_on(grid.start(), grid.end())?;

    let mut out = Vec::with_capacity(prop.modes());
    for n in 1..=prop.modes() {
        let n2 = (n * n) as f64;
        let rate = |sigma: f64| -> Result<f64> { Ok(n2 + potential.value(order.inverse_transform(sigma))?) };
        let drive = |sigma: f64| -> Result<f64> {
            let t = order.inverse_transform(sigma).clamp(grid.start(), grid.end());
            prop.interpolate(&forcing, n, t)
        };
        let rhs = |sigma: f64, z: f64| -> Result<f64> { Ok(-rate(sigma)? * z + drive(sigma)?) };

        let mut z = z0[n - 1];
        for k in 0..tau.len() - 1 {
            let span = tau[k + 1] - tau[k];
            let substeps = ((n2 + p_bound) * span / options.stiffness_step).ceil() as usize;
            let substeps = substeps.max(options.min_substeps);
            let dt = span / substeps as f64;
            for j in 0..substeps {
                let s = tau[k] + dt * j as f64;
                let s_end = if j + 1 == substeps { tau[k + 1] } else { s + dt };
                let mid = 0.5 * (s + s_end);
                let k1 = rhs(s, z)?;
                let k2 = rhs(mid, z + 0.5 * dt * k1)?;
                let k3 = rhs(mid, z + 0.5 * dt * k2)?;
                let k4 = rhs(s_end, z + dt * k3)?;
                z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        out.push(z);
    }
    Ok(SpectralState::new(out))
}
