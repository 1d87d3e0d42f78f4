//! Semilinear nonlocal problem
//!
//! `T_α x + A(t)x = Bu + F(t, x(b(t)))`, `x(ζ) + g(x) = x₀`, `g(x) = Σ cᵢ x(t′ᵢ)`,
//!
//! with the control re-synthesized from the current iterate on every
//! application of the mild-solution operator
//!
//! `Qx(t) = Ψ(t,ζ)[x₀ − g(x)] + ∫_ζ^t Ψ(t,s)[−BH(x₀ − g(x), F)(s) + F(s, x(b(s)))] d(s,α)`.

mod solver;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::control::{synthesize_control, ControlSignal, Propagator};
use crate::error::{Error, Result};
use crate::spectral::SpectralState;

pub use solver::{
    check_sufficient_condition, default_damping, n_alpha, solve, solve_iteration, FixedPointOperator, MildSolution,
    SolveOptions, SolveRun, SufficiencyReport,
};
pub use trajectory::Trajectory;

/// `g(x) = Σ cᵢ x(t′ᵢ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalSpec {
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
}

impl NonlocalSpec {
    pub fn new(weights: Vec<f64>, times: Vec<f64>) -> Self {
        Self { weights, times }
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// Violations of `ζ < t′₁ < … < t′ₚ < t₂`, one message per problem.
    pub fn violations(&self, zeta: f64, t_end: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.weights.len() != self.times.len() {
            out.push(format!(
                "{} weights but {} times",
                self.weights.len(),
                self.times.len()
            ));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            out.push("weights must be finite".into());
        }
        for (i, &t) in self.times.iter().enumerate() {
            if !(t > zeta && t < t_end) {
                out.push(format!("times[{i}] = {t} must lie strictly inside (zeta, tEnd) = ({zeta}, {t_end})"));
            }
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("times must be strictly increasing".into());
        }
        out
    }

    /// Growth constant `L = Σ|cᵢ|` with `‖g(x)‖ ≤ L‖x‖`.
    pub fn lipschitz(&self) -> f64 {
        self.weights.iter().map(|c| c.abs()).sum()
    }

    /// `δ = t′₁`; `g` only sees the trajectory on `[δ, t₂]`.
    pub fn delta(&self) -> Option<f64> {
        self.times.first().copied()
    }
}

/// Coefficient-wise nonlinearity with `|F(t, x)| ≤ c|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    #[default]
    Zero,
    Linear { constant: f64 },
    ScaledSin { constant: f64 },
    ScaledTanh { constant: f64 },
}

impl NonlinearitySpec {
    /// The growth constant `c`.
    pub fn growth(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { constant } | Self::ScaledSin { constant } | Self::ScaledTanh { constant } => constant,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let c = self.growth();
        if c.is_finite() && c >= 0.0 {
            Vec::new()
        } else {
            vec![format!("constant must be finite and nonnegative, got {c}")]
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { constant } => constant * x,
            Self::ScaledSin { constant } => constant * x.sin(),
            Self::ScaledTanh { constant } => constant * x.tanh(),
        }
    }

    pub fn apply(&self, x: &SpectralState) -> SpectralState {
        SpectralState::new(x.coeffs().iter().map(|&v| self.eval(v)).collect())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || self.growth() == 0.0
    }
}

/// Time warp `b : [ζ, t₂] → [ζ, t₂]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    #[default]
    Identity,
    /// `b(t) = max(ζ, t − lag)`.
    ConstantLag { lag: f64 },
    /// `b(t) = ζ + factor (t − ζ)`, `0 ≤ factor ≤ 1`.
    Scale { factor: f64 },
}

impl DelaySpec {
    pub fn violations(&self) -> Vec<String> {
        match *self {
            Self::Identity => Vec::new(),
            Self::ConstantLag { lag } if lag.is_finite() && lag >= 0.0 => Vec::new(),
            Self::ConstantLag { lag } => vec![format!("lag must be finite and nonnegative, got {lag}")],
            Self::Scale { factor } if (0.0..=1.0).contains(&factor) => Vec::new(),
            Self::Scale { factor } => vec![format!("factor must lie in [0,1], got {factor}")],
        }
    }

    pub fn eval(&self, t: f64, zeta: f64) -> f64 {
        match *self {
            Self::Identity => t,
            Self::ConstantLag { lag } => (t - lag).max(zeta),
            Self::Scale { factor } => zeta + factor * (t - zeta),
        }
    }
}

/// Everything needed to evaluate `Q` and `Q_n`.
#[derive(Debug, Clone)]
pub struct NonlocalProblem {
    pub prop: Propagator,
    pub x0: SpectralState,
    pub nonlocal: NonlocalSpec,
    pub nonlinearity: NonlinearitySpec,
    pub delay: DelaySpec,
}

impl NonlocalProblem {
    pub fn new(
        prop: Propagator,
        x0: SpectralState,
        nonlocal: NonlocalSpec,
        nonlinearity: NonlinearitySpec,
        delay: DelaySpec,
    ) -> Result<Self> {
        prop.check_state(&x0)?;
        let hor = prop.horizon();
        let mut errors: Vec<String> = nonlocal
            .violations(hor.zeta(), hor.t_end())
            .into_iter()
            .map(|m| format!("nonlocal: {m}"))
            .collect();
        errors.extend(nonlinearity.violations().into_iter().map(|m| format!("nonlinearity: {m}")));
        errors.extend(delay.violations().into_iter().map(|m| format!("delay: {m}")));
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(Self {
            prop,
            x0,
            nonlocal,
            nonlinearity,
            delay,
        })
    }

    pub fn modes(&self) -> usize {
        self.prop.modes()
    }

    pub fn times(&self) -> &[f64] {
        self.prop.horizon().grid().nodes()
    }

    /// Free evolution `t ↦ Ψ(t, ζ)x₀`, the solver's starting iterate.
    pub fn free_evolution(&self) -> Result<Trajectory> {
        let states = self
            .prop
            .propagate(&self.x0, &ControlSignal::zeros(self.modes(), self.prop.nodes()))?;
        Trajectory::new(self.times().to_vec(), states)
    }

    /// `Ψ_α((n+1)ζ/n, ζ)` as per-mode factors.
    pub fn smoothing_factors(&self, n: usize) -> Result<SpectralState> {
        if n == 0 {
            return Err(Error::Precondition("approximant index n must be at least 1".into()));
        }
        let zeta = self.prop.horizon().zeta();
        let shifted = (n as f64 + 1.0) * zeta / n as f64;
        if shifted > self.prop.horizon().t_end() {
            return Err(Error::Precondition(format!(
                "(n+1)zeta/n = {shifted} exceeds tEnd for n = {n}"
            )));
        }
        let sys = self.prop.system();
        let ones = SpectralState::new(vec![1.0; self.modes()]);
        sys.apply_evolution(shifted, zeta, &ones)
    }

    /// Forcing samples `F(s_k, x(b(s_k)))`.
    pub fn forcing(&self, x: &Trajectory) -> Result<ControlSignal> {
        let zeta = self.prop.horizon().zeta();
        let states = self
            .times()
            .iter()
            .map(|&s| Ok(self.nonlinearity.apply(&x.at(self.delay.eval(s, zeta))?)))
            .collect::<Result<Vec<_>>>()?;
        ControlSignal::from_states(&states)
    }

    /// One application of `Q` (`smoothing = None`) or `Q_n`, returning the
    /// image trajectory and the control synthesized for it.
    pub fn apply_operator(
        &self,
        x: &Trajectory,
        smoothing: Option<&SpectralState>,
    ) -> Result<(Trajectory, ControlSignal)> {
        if x.times() != self.times() || x.modes() != self.modes() {
            return Err(Error::Shape("iterate does not live on the problem grid".into()));
        }
        let mut g = eval_g(&self.nonlocal, x, self.modes())?;
        if let Some(factors) = smoothing {
            for (gi, fi) in g.coeffs_mut().iter_mut().zip(factors.coeffs()) {
                *gi *= fi;
            }
        }
        let start = &self.x0 - &g;
        let forcing = if self.nonlinearity.is_zero() {
            ControlSignal::zeros(self.modes(), self.prop.nodes())
        } else {
            self.forcing(x)?
        };
        let control = synthesize_control(&self.prop, &start, &forcing)?;
        let drive = forcing.axpy(1.0, &control)?;
        let states = self.prop.propagate(&start, &drive)?;
        Ok((Trajectory::new(self.times().to_vec(), states)?, control))
    }
}

/// `Σ cᵢ x(t′ᵢ)`, with `x` linearly interpolated in `t`.
pub fn eval_g(spec: &NonlocalSpec, x: &Trajectory, modes: usize) -> Result<SpectralState> {
    let mut acc = SpectralState::zeros(modes);
    for (&c, &t) in spec.weights.iter().zip(&spec.times) {
        let (lo, hi) = x.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::Range(format!("nonlocal time {t} outside trajectory span [{lo}, {hi}]")));
        }
        if c != 0.0 {
            acc = acc.axpy(c, &x.at(t)?);
        }
    }
    Ok(acc)
}

pub fn apply_q(problem: &NonlocalProblem, x: &Trajectory) -> Result<Trajectory> {
    Ok(problem.apply_operator(x, None)?.0)
}

/// `Q_n`: the nonlocal term premultiplied by `Ψ_α((n+1)ζ/n, ζ)`.
pub fn apply_qn(problem: &NonlocalProblem, n: usize, x: &Trajectory) -> Result<Trajectory> {
    let factors = problem.smoothing_factors(n)?;
    Ok(problem.apply_operator(x, Some(&factors))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{FractionalOrder, ScalarFunction};
    use crate::control::ControlHorizon;
    use crate::spectral::EvolutionSystem;

    fn problem(zeta: f64, nonlocal: NonlocalSpec, nonlinearity: NonlinearitySpec) -> NonlocalProblem {
        let order = FractionalOrder::new(1.0).unwrap();
        let sys = EvolutionSystem::new(order, 4, ScalarFunction::constant(0.0), zeta, 1.0).unwrap();
        let prop = Propagator::new(&sys, &ControlHorizon::for_system(&sys, 64).unwrap()).unwrap();
        NonlocalProblem::new(
            prop,
            SpectralState::new(vec![1.0, -0.5, 0.25, 0.1]),
            nonlocal,
            nonlinearity,
            DelaySpec::Identity,
        )
        .unwrap()
    }

    #[test]
    fn eval_g_zero_weights() {
        let p = problem(0.1, NonlocalSpec::new(vec![0.0, 0.0], vec![0.3, 0.6]), NonlinearitySpec::Zero);
        let x = p.free_evolution().unwrap();
        assert_eq!(eval_g(&p.nonlocal, &x, 4).unwrap(), SpectralState::zeros(4));
    }

    #[test]
    fn eval_g_single_node() {
        let p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::Zero);
        let x = p.free_evolution().unwrap();
        let t = x.times()[10];
        let g = eval_g(&NonlocalSpec::new(vec![1.0], vec![t]), &x, 4).unwrap();
        assert_eq!(&g, &x.states()[10]);
    }

    #[test]
    fn eval_g_linear_in_weights() {
        let p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::Zero);
        let bar = SpectralState::new(vec![2.0, 1.0, -1.0, 0.5]);
        let x = Trajectory::constant(p.times().to_vec(), bar.clone()).unwrap();
        let g = eval_g(&NonlocalSpec::new(vec![0.3, 0.2], vec![0.4, 0.7]), &x, 4).unwrap();
        assert!((&g - &bar.scaled(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn eval_g_outside_span() {
        let p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::Zero);
        let x = p.free_evolution().unwrap();
        assert!(matches!(
            eval_g(&NonlocalSpec::new(vec![1.0], vec![2.0]), &x, 4),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn nonlocal_times_validated() {
        let order = FractionalOrder::new(1.0).unwrap();
        let sys = EvolutionSystem::new(order, 2, ScalarFunction::constant(0.0), 0.1, 1.0).unwrap();
        let prop = Propagator::new(&sys, &ControlHorizon::for_system(&sys, 64).unwrap()).unwrap();
        let err = NonlocalProblem::new(
            prop,
            SpectralState::zeros(2),
            NonlocalSpec::new(vec![0.1], vec![0.05]),
            NonlinearitySpec::Zero,
            DelaySpec::Identity,
        )
        .unwrap_err();
        match err {
            Error::Validation(msgs) => assert!(msgs[0].starts_with("nonlocal")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn q_is_independent_of_iterate_without_coupling() {
        let p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::Zero);
        let a = apply_q(&p, &p.free_evolution().unwrap()).unwrap();
        let b = apply_q(&p, &Trajectory::constant(p.times().to_vec(), SpectralState::new(vec![3.0; 4])).unwrap())
            .unwrap();
        assert_eq!(a, b);
        assert!(a.final_state().norm() <= 1e-8);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let mut p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::Zero);
        p.x0 = SpectralState::zeros(4);
        let out = apply_q(&p, &p.free_evolution().unwrap()).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn qn_equals_q_without_nonlocal_term() {
        let p = problem(0.1, NonlocalSpec::none(), NonlinearitySpec::ScaledSin { constant: 0.2 });
        let x = p.free_evolution().unwrap();
        let q = apply_q(&p, &x).unwrap();
        for n in [1, 5, 100] {
            assert_eq!(apply_qn(&p, n, &x).unwrap(), q);
        }
    }

    #[test]
    fn qn_smoothing_factor_closed_form() {
        let p = problem(0.5, NonlocalSpec::none(), NonlinearitySpec::Zero);
        let f = p.smoothing_factors(1).unwrap();
        for n in 1..=4 {
            let exact = (-((n * n) as f64) * 0.5).exp();
            assert!((f[n - 1] - exact).abs() < 1e-15);
        }
        assert!(p.smoothing_factors(0).is_err());
    }

    #[test]
    fn delay_maps_into_horizon() {
        for d in [
            DelaySpec::Identity,
            DelaySpec::ConstantLag { lag: 0.3 },
            DelaySpec::Scale { factor: 0.5 },
        ] {
            for i in 0..=20 {
                let t = 0.1 + 0.9 * i as f64 / 20.0;
                let b = d.eval(t, 0.1);
                assert!((0.1..=1.0).contains(&b));
                assert!(b <= t);
            }
        }
        assert!(!DelaySpec::Scale { factor: 1.5 }.violations().is_empty());
    }
}
