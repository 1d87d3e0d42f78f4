//! Linear null controllability of `T_α z + A(t)z = Bu + h` with `B = I`.
//!
//! * `L u = ∫_ζ^{t₂} Ψ_α(t₂, s) B u(s) d(s, α)` ([`apply_l`])
//! * `N(z₀, h) = Ψ_α(t₂, ζ) z₀ + ∫_ζ^{t₂} Ψ_α(t₂, s) h(s) d(s, α)` ([`apply_n`])
//! * `W = L L*`, diagonal in the sine basis ([`gramian`])
//! * `u = −B*Ψ*(t₂, ·) W⁻¹ N(z₀, h)`, the minimum-norm element of
//!   `L⁻¹{−N(z₀, h)}` ([`synthesize_control`])

mod propagator;
mod signal;
mod simulate;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralState;

pub use propagator::{ControlHorizon, Propagator, DEFAULT_TIME_NODES, MIN_TIME_NODES, PANEL_QUADRATURE_ORDER};
pub use signal::ControlSignal;
pub use simulate::{simulate_linear, SimulationOptions};

/// Gramian entries below this fraction of the largest one are treated as singular.
pub const RANK_THRESHOLD: f64 = 1e-14;
/// Default sample count of the randomized `‖H‖` estimate.
pub const DEFAULT_NORM_SAMPLES: usize = 200;

/// Diagonal of the controllability Gramian `∫ Ψ_α(t₂, s)² d(s, α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gramian {
    pub diag: Vec<f64>,
}

impl Gramian {
    pub fn entry(&self, mode: usize) -> f64 {
        self.diag[mode - 1]
    }

    pub fn max(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fails with [`Error::NearSingular`] naming the first mode below the rank threshold.
    pub fn check_rank(&self) -> Result<()> {
        let threshold = RANK_THRESHOLD * self.max();
        for (k, &w) in self.diag.iter().enumerate() {
            if !(w > threshold) || !(w > 0.0) {
                return Err(Error::NearSingular {
                    mode: k + 1,
                    value: w,
                    threshold,
                });
            }
        }
        Ok(())
    }
}

pub fn gramian(prop: &Propagator) -> Gramian {
    Gramian {
        diag: prop.gramian_diagonal().to_vec(),
    }
}

pub fn apply_l(prop: &Propagator, u: &ControlSignal) -> Result<SpectralState> {
    prop.final_state(&SpectralState::zeros(prop.modes()), u)
}

pub fn apply_n(prop: &Propagator, z0: &SpectralState, h: &ControlSignal) -> Result<SpectralState> {
    prop.final_state(z0, h)
}

/// `B*Ψ*(t₂, ·) z` sampled on the grid.
pub fn adjoint_signal(prop: &Propagator, z: &SpectralState) -> Result<ControlSignal> {
    prop.check_state(z)?;
    let mut out = ControlSignal::zeros(prop.modes(), prop.nodes());
    for n in 1..=prop.modes() {
        for (slot, f) in out.mode_mut(n).iter_mut().zip(prop.adjoint_profile(n)) {
            *slot = f * z[n - 1];
        }
    }
    Ok(out)
}

/// Minimum-norm control that, with forcing `h`, drives `z0` to zero at `t₂`:
/// `u_n(s) = −Ψ_α(t₂, s)_n W_nn⁻¹ [N(z0, h)]_n`.
pub fn synthesize_control(prop: &Propagator, z0: &SpectralState, h: &ControlSignal) -> Result<ControlSignal> {
    let target = apply_n(prop, z0, h)?;
    control_for_target(prop, &target)
}

/// Minimum-norm `u` with `L u = −target`.
pub fn control_for_target(prop: &Propagator, target: &SpectralState) -> Result<ControlSignal> {
    let gram = gramian(prop);
    gram.check_rank()?;
    let coeffs = SpectralState::new(
        target
            .coeffs()
            .iter()
            .zip(&gram.diag)
            .map(|(y, w)| -y / w)
            .collect(),
    );
    adjoint_signal(prop, &coeffs)
}

/// Which inputs `(z0, h)` the `‖H‖` estimate samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSampling {
    /// Both the initial state and the forcing.
    Full,
    /// `h ≡ 0`.
    InitialStateOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub samples: usize,
}

/// Randomized lower estimate of `‖H‖`, the sup of `‖u‖_{L², α} / ‖(z0, h)‖`
/// over sampled unit inputs. Half of the forcing samples are drawn along the
/// adjoint profiles (where `N` is largest), the other half as white noise.
pub fn operator_norm_h<R: Rng + ?Sized>(
    prop: &Propagator,
    samples: usize,
    sampling: NormSampling,
    rng: &mut R,
) -> Result<NormEstimate> {
    if samples == 0 {
        return Err(Error::Precondition("norm estimate needs at least one sample".into()));
    }
    let (modes, nodes) = (prop.modes(), prop.nodes());
    let profiles: Vec<Vec<f64>> = (1..=modes).map(|n| prop.adjoint_profile(n).collect()).collect();
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let z0 = SpectralState::new((0..modes).map(|_| rng.sample(StandardNormal)).collect());
        let h = match sampling {
            NormSampling::InitialStateOnly => ControlSignal::zeros(modes, nodes),
            NormSampling::Full if i % 2 == 0 => {
                let amplitude: Vec<f64> = (0..modes).map(|_| rng.sample(StandardNormal)).collect();
                ControlSignal::from_fn(modes, nodes, |n, k| amplitude[n - 1] * profiles[n - 1][k])
            }
            NormSampling::Full => ControlSignal::from_fn(modes, nodes, |_, _| rng.sample(StandardNormal)),
        };
        let input_norm = (z0.norm().powi(2) + prop.signal_norm(&h)?.powi(2)).sqrt();
        if input_norm == 0.0 {
            continue;
        }
        let u = synthesize_control(prop, &z0, &h)?;
        best = best.max(prop.signal_norm(&u)? / input_norm);
    }
    Ok(NormEstimate { value: best, samples })
}

/// `γ = ℓ/(ℓ + 1)` with `ℓ = t₂ − ζ`, the constant of the observability inequality
/// `∫‖Ψ(t₂,s)z‖² d(s,α) ≥ γ(‖Ψ(t₂,ζ)z‖² + ∫‖Ψ(t₂,s)z‖² d(s,α))`.
pub fn gamma_gram(horizon: &ControlHorizon) -> f64 {
    let l = horizon.length();
    l / (l + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullControllabilityReport {
    pub trials: usize,
    pub gamma_gram: f64,
    pub min_margin: f64,
    pub holds: bool,
    /// `W_nn / (Ψ(t₂, ζ)_n² + W_nn)`; the inequality holds for `e_n` iff this is at least `γ`.
    pub mode_ratio: Vec<f64>,
}

/// Evaluates the observability inequality with `γ = gamma_gram` on `trials`
/// random unit states; `margin = lhs − rhs`.
pub fn check_null_controllable<R: Rng + ?Sized>(
    prop: &Propagator,
    trials: usize,
    rng: &mut R,
) -> Result<NullControllabilityReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let gamma = gamma_gram(prop.horizon());
    let w = prop.gramian_diagonal();
    let free: Vec<f64> = (1..=prop.modes()).map(|n| prop.free_decay(n).powi(2)).collect();
    let mut min_margin = f64::INFINITY;
    for _ in 0..trials {
        let z: Vec<f64> = (0..prop.modes()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = z.iter().map(|c: &f64| c * c).sum::<f64>().sqrt();
        let (mut lhs, mut free_part) = (0.0, 0.0);
        for (k, c) in z.iter().enumerate() {
            let c2 = (c / norm).powi(2);
            lhs += c2 * w[k];
            free_part += c2 * free[k];
        }
        let margin = lhs - gamma * (free_part + lhs);
        min_margin = min_margin.min(margin);
    }
    Ok(NullControllabilityReport {
        trials,
        gamma_gram: gamma,
        min_margin,
        holds: min_margin >= 0.0,
        mode_ratio: w.iter().zip(&free).map(|(w, f)| w / (f + w)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{FractionalOrder, ScalarFunction};
    use crate::spectral::EvolutionSystem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn heat(alpha: f64, modes: usize, zeta: f64, t_end: f64) -> Propagator {
        let order = FractionalOrder::new(alpha).unwrap();
        let sys = EvolutionSystem::new(order, modes, ScalarFunction::constant(0.0), zeta, t_end).unwrap();
        Propagator::new(&sys, &ControlHorizon::for_system(&sys, 256).unwrap()).unwrap()
    }

    #[test]
    fn zero_control_gives_zero_state() {
        let prop = heat(1.0, 4, 1e-6, 1.0);
        let z = apply_l(&prop, &ControlSignal::zeros(4, 256)).unwrap();
        assert!(z.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn constant_control_closed_form() {
        let prop = heat(1.0, 1, 1e-6, 1.0);
        let u = ControlSignal::from_fn(1, 256, |_, _| 1.0);
        let z = apply_l(&prop, &u).unwrap();
        assert!((z[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-6, "{}", z[0]);
    }

    #[test]
    fn free_plus_forced() {
        let prop = heat(1.0, 1, 1e-6, 1.0);
        let h = ControlSignal::from_fn(1, 256, |_, _| 1.0);
        let z = apply_n(&prop, &SpectralState::unit(1, 1), &h).unwrap();
        let exact = (-1.0f64).exp() + 1.0 - (-1.0f64).exp();
        assert!((z[0] - exact).abs() < 1e-6);
        let free = apply_n(&prop, &SpectralState::new(vec![0.7]), &ControlSignal::zeros(1, 256)).unwrap();
        let sys = prop.system();
        let reference = sys.apply_evolution(1.0, 1e-6, &SpectralState::new(vec![0.7])).unwrap();
        assert!((free[0] - reference[0]).abs() < 1e-14);
    }

    #[test]
    fn adjoint_profile_reproduces_gramian() {
        let prop = heat(0.6, 8, 0.01, 1.5);
        let profile = adjoint_signal(&prop, &SpectralState::new(vec![1.0; 8])).unwrap();
        let z = apply_l(&prop, &profile).unwrap();
        for (n, w) in gramian(&prop).diag.iter().enumerate() {
            assert!((z[n] - w).abs() <= 1e-13 * w.max(1e-300), "mode {}: {} vs {w}", n + 1, z[n]);
        }
    }

    #[test]
    fn gramian_closed_forms() {
        let prop = heat(1.0, 1, 1e-6, 1.0);
        let w = gramian(&prop).entry(1);
        assert!((w - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-6);
        let prop = heat(0.5, 1, 1.0, 4.0);
        let w = gramian(&prop).entry(1);
        assert!((w - (1.0 - (-4.0f64).exp()) / 2.0).abs() < 1e-6, "{w}");
    }

    #[test]
    fn single_mode_control_formula() {
        let prop = heat(1.0, 1, 1e-6, 1.0);
        let u = synthesize_control(&prop, &SpectralState::unit(1, 1), &ControlSignal::zeros(1, 256)).unwrap();
        let w = (1.0 - (-2.0f64).exp()) / 2.0;
        let nodes = prop.horizon().grid().nodes().to_vec();
        for (k, &s) in nodes.iter().enumerate() {
            let exact = -(-(1.0 - s)).exp() * (-(1.0 - 1e-6f64)).exp() / w;
            assert!((u.get(1, k) - exact).abs() < 1e-6, "node {k}");
        }
    }

    #[test]
    fn zero_input_gives_zero_control() {
        let prop = heat(0.8, 4, 0.1, 1.0);
        let u = synthesize_control(&prop, &SpectralState::zeros(4), &ControlSignal::zeros(4, 256)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn rank_threshold_names_mode() {
        let g = Gramian { diag: vec![1.0, 1e-3, 1e-16] };
        assert!(matches!(g.check_rank(), Err(Error::NearSingular { mode: 3, .. })));
    }

    #[test]
    fn observability_per_mode_ratio() {
        let prop = heat(1.0, 8, 1e-6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = check_null_controllable(&prop, 50, &mut rng).unwrap();
        assert!(report.holds);
        assert!(report.mode_ratio.iter().all(|&r| r >= report.gamma_gram));
        assert!(check_null_controllable(&prop, 0, &mut rng).is_err());
    }

    #[test]
    fn single_mode_norm_of_h() {
        let prop = heat(1.0, 1, 1e-6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = operator_norm_h(&prop, 200, NormSampling::InitialStateOnly, &mut rng).unwrap();
        let w = (1.0 - (-2.0f64).exp()) / 2.0;
        let exact = (-1.0f64).exp() / w.sqrt();
        assert!((est.value - exact).abs() < 0.05 * exact, "{} vs {exact}", est.value);
        assert_eq!(est.samples, 200);
    }
}
