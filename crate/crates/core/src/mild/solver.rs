use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{NonlocalProblem, Trajectory};
use crate::control::{operator_norm_h, ControlSignal, NormSampling, DEFAULT_NORM_SAMPLES};
use crate::error::{Error, Result};
use crate::spectral::SpectralState;

/// Sufficiency condition `M²L + ‖B‖‖H‖N_α(ML + γ) + N_α M γ < 1`, with both
/// the `N_α` value used for the verdict and the `√T` variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyReport {
    pub m: f64,
    pub h_norm: f64,
    pub h_samples: usize,
    pub b_norm: f64,
    pub lipschitz_g: f64,
    pub gamma_growth: f64,
    pub n_alpha: f64,
    pub sqrt_t: f64,
    pub term_nonlocal: f64,
    pub term_control: f64,
    pub term_growth: f64,
    pub value: f64,
    pub value_sqrt_t: f64,
    pub satisfied: bool,
    /// `δ = t′₁` of the nonlocal condition, when present.
    pub delta: Option<f64>,
}

impl SufficiencyReport {
    pub fn margin(&self) -> f64 {
        1.0 - self.value
    }
}

/// `N_α = [∫_ζ^{t₂} s^{2(α−1)} ds]^{1/2}`, with the logarithmic limit at `α = 1/2`.
pub fn n_alpha(alpha: f64, zeta: f64, t_end: f64) -> f64 {
    let p = 2.0 * alpha - 1.0;
    if p.abs() < 1e-12 {
        (t_end.ln() - zeta.ln()).sqrt()
    } else {
        ((t_end.powf(p) - zeta.powf(p)) / p).sqrt()
    }
}

/// Evaluates the left side of the sufficiency condition. `‖H‖` is estimated
/// with `samples` random inputs drawn from `seed`.
pub fn check_sufficient_condition(problem: &NonlocalProblem, samples: usize, seed: u64) -> Result<SufficiencyReport> {
    let sys = problem.prop.system();
    let hor = problem.prop.horizon();
    let m = sys.operator_norm_bound()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = operator_norm_h(&problem.prop, samples, NormSampling::Full, &mut rng)?;
    let b_norm = 1.0;
    let l = problem.nonlocal.lipschitz();
    let gamma = problem.nonlinearity.growth();
    let n = n_alpha(sys.alpha(), hor.zeta(), hor.t_end());
    let sqrt_t = hor.t_end().sqrt();
    let term_nonlocal = m * m * l;
    let term_control = b_norm * h.value * n * (m * l + gamma);
    let term_growth = n * m * gamma;
    let value = term_nonlocal + term_control + term_growth;
    let value_sqrt_t = term_nonlocal + b_norm * h.value * sqrt_t * (m * l + gamma) + sqrt_t * m * gamma;
    Ok(SufficiencyReport {
        m,
        h_norm: h.value,
        h_samples: h.samples,
        b_norm,
        lipschitz_g: l,
        gamma_growth: gamma,
        n_alpha: n,
        sqrt_t,
        term_nonlocal,
        term_control,
        term_growth,
        value,
        value_sqrt_t,
        satisfied: value < 1.0,
        delta: problem.nonlocal.delta(),
    })
}

/// Which fixed-point map is iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointOperator {
    /// `Q`.
    Exact,
    /// `Q_n` with the nonlocal term smoothed by `Ψ_α((n+1)ζ/n, ζ)`.
    Approximant(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Overrides the sufficiency-driven choice of the damping factor.
    pub damping: Option<f64>,
    pub operator: FixedPointOperator,
    pub norm_samples: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            damping: None,
            operator: FixedPointOperator::Exact,
            norm_samples: DEFAULT_NORM_SAMPLES,
            seed: 42,
        }
    }
}

/// Damping `ω = 1` when the sufficiency value is at most 0.5, else `ω = 0.5`.
pub fn default_damping(sufficiency_value: f64) -> f64 {
    if sufficiency_value <= 0.5 {
        1.0
    } else {
        0.5
    }
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub solution: Trajectory,
    pub control: ControlSignal,
    pub converged: bool,
    /// Number of updates `x ← (1−ω)x + ωQx` applied.
    pub iterations: usize,
    /// `‖Q x_k − x_k‖_∞` for every evaluated iterate.
    pub residual_history: Vec<f64>,
    /// `‖Q x* − x*‖_∞` of the returned trajectory.
    pub fixed_point_residual: f64,
    pub final_state_norm: f64,
    pub damping: f64,
}

impl SolveRun {
    pub fn last_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Damped Picard iteration from the free evolution of `x₀`.
///
/// When `‖Q x_k − x_k‖ ≤ tol` the image `x* = Q x_k` is returned (its final
/// state is zero by construction of the control), provided its own residual
/// `‖Q x* − x*‖` is at most `2 tol`; otherwise iteration resumes from `x*`.
pub fn solve_iteration(problem: &NonlocalProblem, options: &SolveOptions, damping: f64) -> Result<SolveRun> {
    if !(options.tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be positive, got {}", options.tol)));
    }
    if options.max_iter == 0 {
        return Err(Error::Precondition("maxIter must be at least 1".into()));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::Precondition(format!("damping must lie in (0,1], got {damping}")));
    }
    let smoothing: Option<SpectralState> = match options.operator {
        FixedPointOperator::Exact => None,
        FixedPointOperator::Approximant(n) => Some(problem.smoothing_factors(n)?),
    };
    let apply = |x: &Trajectory| problem.apply_operator(x, smoothing.as_ref());

    let mut x = problem.free_evolution()?;
    let mut history = Vec::new();
    let mut iterations = 0;
    let (mut image, mut control) = apply(&x)?;
    loop {
        let residual = image.sup_distance(&x)?;
        history.push(residual);
        if residual <= options.tol {
            let (next, next_control) = apply(&image)?;
            let certificate = next.sup_distance(&image)?;
            if certificate <= 2.0 * options.tol {
                return Ok(SolveRun {
                    final_state_norm: image.final_state().norm(),
                    solution: image,
                    control,
                    converged: true,
                    iterations,
                    residual_history: history,
                    fixed_point_residual: certificate,
                    damping,
                });
            }
            if iterations >= options.max_iter {
                break;
            }
            iterations += 1;
            x = image;
            image = next;
            control = next_control;
            continue;
        }
        if iterations >= options.max_iter || !residual.is_finite() {
            break;
        }
        iterations += 1;
        x = if damping == 1.0 { image } else { x.blend(&image, damping)? };
        (image, control) = apply(&x)?;
    }
    let fixed_point_residual = image.sup_distance(&x)?;
    Ok(SolveRun {
        final_state_norm: image.final_state().norm(),
        solution: image,
        control,
        converged: false,
        iterations,
        residual_history: history,
        fixed_point_residual,
        damping,
    })
}

#[derive(Debug, Clone)]
pub struct MildSolution {
    pub run: SolveRun,
    pub sufficiency: SufficiencyReport,
}

/// Checks the sufficiency condition, picks the damping from it and iterates.
/// Fails with [`Error::NonConvergence`] (carrying the sufficiency value) when
/// `max_iter` is exhausted.
pub fn solve(problem: &NonlocalProblem, options: &SolveOptions) -> Result<MildSolution> {
    let sufficiency = check_sufficient_condition(problem, options.norm_samples, options.seed)?;
    let damping = options.damping.unwrap_or_else(|| default_damping(sufficiency.value));
    let run = solve_iteration(problem, options, damping)?;
    if !run.converged {
        return Err(Error::NonConvergence {
            iterations: run.iterations,
            residual: run.last_residual(),
            sufficiency_value: sufficiency.value,
        });
    }
    Ok(MildSolution { run, sufficiency })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_alpha_special_cases() {
        assert!((n_alpha(1.0, 0.0001, 1.0) - (1.0f64 - 0.0001).sqrt()).abs() < 1e-15);
        let half = n_alpha(0.5, 0.01, 1.0);
        assert!((half - (100f64).ln().sqrt()).abs() < 1e-12);
        // continuity across α = 1/2
        let near = n_alpha(0.5 + 1e-7, 0.01, 1.0);
        assert!((near - half).abs() < 1e-5);
    }

    #[test]
    fn damping_rule() {
        assert_eq!(default_damping(0.0), 1.0);
        assert_eq!(default_damping(0.5), 1.0);
        assert_eq!(default_damping(0.51), 0.5);
    }
}
