//! Sine eigenbasis of the Dirichlet Laplacian on `(0, π)` and the diagonal
//! evolution operator of `A(t)z = z″ + p(t)z`.
//!
//! In the orthonormal basis `e_n(x) = √2 sin(nx)` the evolution operator acts
//! mode by mode:
//!
//! `Ψ_α(t, s) e_n = exp(−n² (t^α/α − s^α/α) − ∫_s^t p(r) r^{α−1} dr) e_n`.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::calculus::{conformable_integral, AlphaGrid, FractionalOrder, ScalarFunction};
use crate::error::{Error, Result};

/// Default number of sine modes.
pub const DEFAULT_MODES: usize = 16;
/// Panels of the α-integral of the potential between two times.
pub const POTENTIAL_PANELS: usize = 8;
/// Nodes per axis of the `(t, s)` scan behind [`EvolutionSystem::operator_norm_bound`].
pub const NORM_SCAN_NODES: usize = 64;

/// Coefficients of `z = Σ coeffs[n−1] e_n` in the truncated sine basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralState {
    coeffs: Vec<f64>,
}

impl SpectralState {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(modes: usize) -> Self {
        Self { coeffs: vec![0.0; modes] }
    }

    /// `e_mode` (1-based mode index).
    pub fn unit(modes: usize, mode: usize) -> Self {
        let mut s = Self::zeros(modes);
        s.coeffs[mode - 1] = 1.0;
        s
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    /// `L²(0, π)` norm; the basis is orthonormal.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    /// Samples of `z(x)` at `points` uniformly spaced nodes of `[0, π]`, endpoints included.
    pub fn reconstruct(&self, points: usize) -> Vec<f64> {
        uniform_x_grid(points)
            .map(|x| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * SQRT_2 * ((k + 1) as f64 * x).sin())
                    .sum()
            })
            .collect()
    }
}

impl Index<usize> for SpectralState {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.coeffs[k]
    }
}

impl Add for &SpectralState {
    type Output = SpectralState;

    fn add(self, rhs: Self) -> SpectralState {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralState {
    type Output = SpectralState;

    fn sub(self, rhs: Self) -> SpectralState {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<&SpectralState> for f64 {
    type Output = SpectralState;

    fn mul(self, rhs: &SpectralState) -> SpectralState {
        rhs.scaled(self)
    }
}

fn uniform_x_grid(points: usize) -> impl Iterator<Item = f64> {
    let h = if points > 1 { PI / (points - 1) as f64 } else { 0.0 };
    (0..points).map(move |i| h * i as f64)
}

/// Sine coefficients `⟨z, e_n⟩`, `n = 1..=modes`, of samples of `z` on a
/// uniform grid of `[0, π]` (endpoints included), by the composite trapezoid rule.
/// The inner product is `(1/π)∫₀^π`, under which `e_n = √2 sin(nx)` is orthonormal.
pub fn project(samples: &[f64], modes: usize) -> Result<SpectralState> {
    let required = 4 * modes;
    if samples.len() < required || samples.len() < 2 {
        return Err(Error::Resolution {
            points: samples.len(),
            modes,
            required: required.max(2),
        });
    }
    let h = PI / (samples.len() - 1) as f64;
    let last = samples.len() - 1;
    let coeffs = (1..=modes)
        .map(|n| {
            let sum: f64 = uniform_x_grid(samples.len())
                .zip(samples)
                .enumerate()
                .map(|(i, (x, z))| {
                    let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                    w * z * (n as f64 * x).sin()
                })
                .sum();
            SQRT_2 * h * sum / PI
        })
        .collect();
    Ok(SpectralState::new(coeffs))
}

/// The non-autonomous model system on the horizon `[ζ, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSystem {
    order: FractionalOrder,
    modes: usize,
    potential: ScalarFunction,
    zeta: f64,
    t_end: f64,
    potential_nonnegative: bool,
}

impl EvolutionSystem {
    pub fn new(
        order: FractionalOrder,
        modes: usize,
        potential: ScalarFunction,
        zeta: f64,
        t_end: f64,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Domain("mode count must be at least 1".into()));
        }
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
        }
        if !(t_end > zeta && t_end.is_finite()) {
            return Err(Error::Domain(format!("tEnd must exceed zeta, got zeta = {zeta}, tEnd = {t_end}")));
        }
        potential.validate()?;
        let (lo, hi) = potential.support();
        if zeta < lo || t_end > hi {
            return Err(Error::Range(format!(
                "potential is defined on [{lo}, {hi}] but the horizon is [{zeta}, {t_end}]"
            )));
        }
        let potential_nonnegative = potential.lower_bound_on(zeta, t_end)? >= 0.0;
        Ok(Self {
            order,
            modes,
            potential,
            zeta,
            t_end,
            potential_nonnegative,
        })
    }

    /// `p ≡ 0` on `[ζ, T]` with `ζ = 10⁻⁶ T`.
    pub fn heat(order: FractionalOrder, modes: usize, t_end: f64) -> Result<Self> {
        Self::new(order, modes, ScalarFunction::constant(0.0), 1e-6 * t_end, t_end)
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.order.alpha()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn potential(&self) -> &ScalarFunction {
        &self.potential
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn potential_nonnegative(&self) -> bool {
        self.potential_nonnegative
    }

    /// `∫_s^t p(r) r^{α−1} dr`.
    pub fn potential_integral(&self, t: f64, s: f64) -> Result<f64> {
        if let ScalarFunction::Constant { value } = self.potential {
            return Ok(value * (self.order.transform(t) - self.order.transform(s)));
        }
        conformable_integral(&self.potential, self.order, s, t, POTENTIAL_PANELS)
    }

    fn check_times(&self, t: f64, s: f64) -> Result<()> {
        if !(s <= t) {
            return Err(Error::Ordering { t, s });
        }
        let slack = 1e-12 * self.t_end;
        if s < self.zeta - slack || t > self.t_end + slack {
            return Err(Error::Domain(format!(
                "times ({s}, {t}) leave the horizon [{}, {}]",
                self.zeta, self.t_end
            )));
        }
        Ok(())
    }

    /// Exponent of [`Self::evolution_factor`].
    pub fn evolution_exponent(&self, mode: usize, t: f64, s: f64) -> Result<f64> {
        self.check_mode(mode)?;
        self.check_times(t, s)?;
        if t == s {
            return Ok(0.0);
        }
        let n2 = (mode * mode) as f64;
        let dtau = self.order.transform(t) - self.order.transform(s);
        Ok(-n2 * dtau - self.potential_integral(t, s)?)
    }

    /// Diagonal entry of `Ψ_α(t, s)` for mode `n` (1-based).
    pub fn evolution_factor(&self, mode: usize, t: f64, s: f64) -> Result<f64> {
        Ok(self.evolution_exponent(mode, t, s)?.exp())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.modes {
            return Err(Error::Domain(format!("mode {mode} outside 1..={}", self.modes)));
        }
        Ok(())
    }

    fn check_state(&self, z: &SpectralState) -> Result<()> {
        if z.modes() != self.modes {
            return Err(Error::Shape(format!(
                "state has {} modes, system has {}",
                z.modes(),
                self.modes
            )));
        }
        Ok(())
    }

    /// `Ψ_α(t, s) z`.
    pub fn apply_evolution(&self, t: f64, s: f64, z: &SpectralState) -> Result<SpectralState> {
        self.check_state(z)?;
        self.check_times(t, s)?;
        let dtau = self.order.transform(t) - self.order.transform(s);
        let p = if t == s { 0.0 } else { self.potential_integral(t, s)? };
        let coeffs = z
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let n2 = ((k + 1) * (k + 1)) as f64;
                if t == s {
                    *c
                } else {
                    (-n2 * dtau - p).exp() * c
                }
            })
            .collect();
        Ok(SpectralState::new(coeffs))
    }

    /// `Ψ_α*(t, s) z`; the operator is self-adjoint in the sine basis.
    pub fn apply_adjoint(&self, t: f64, s: f64, z: &SpectralState) -> Result<SpectralState> {
        self.apply_evolution(t, s, z)
    }

    /// Uniform bound `M ≥ ‖Ψ_α(t, s)‖` from a scan of a
    /// [`NORM_SCAN_NODES`]² grid (uniform in transformed time, `t ≥ s`).
    /// Only mode 1 is scanned when `p ≥ 0`, where factors decrease in `n`.
    pub fn operator_norm_bound(&self) -> Result<f64> {
        let grid = AlphaGrid::uniform_in_transformed_time(self.order, self.zeta, self.t_end, NORM_SCAN_NODES)?;
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in grid.nodes().windows(2) {
            acc += self.potential_integral(w[1], w[0])?;
            cumulative.push(acc);
        }
        let scanned = if self.potential_nonnegative { 1 } else { self.modes };
        let tau = grid.transformed();
        let mut bound: f64 = 1.0;
        for n in 1..=scanned {
            let n2 = (n * n) as f64;
            for i in 0..grid.len() {
                for j in 0..=i {
                    let exponent = -n2 * (tau[i] - tau[j]) - (cumulative[i] - cumulative[j]);
                    bound = bound.max(exponent.exp());
                }
            }
        }
        Ok(bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(alpha: f64) -> FractionalOrder {
        FractionalOrder::new(alpha).unwrap()
    }

    fn heat(alpha: f64, modes: usize, zeta: f64, t_end: f64) -> EvolutionSystem {
        EvolutionSystem::new(order(alpha), modes, ScalarFunction::constant(0.0), zeta, t_end).unwrap()
    }

    #[test]
    fn project_first_eigenfunction() {
        let samples: Vec<f64> = uniform_x_grid(401).map(|x| SQRT_2 * x.sin()).collect();
        let z = project(&samples, 4).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-8);
        for k in 1..4 {
            assert!(z[k].abs() < 1e-8);
        }
    }

    #[test]
    fn project_zero() {
        let z = project(&[0.0; 64], 8).unwrap();
        assert!(z.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn project_parabola_matches_closed_form() {
        // ⟨x(π − x), e_n⟩ = √2 · 2(1 − (−1)ⁿ)/(π n³).
        let samples: Vec<f64> = uniform_x_grid(2001).map(|x| x * (PI - x)).collect();
        let z = project(&samples, 3).unwrap();
        for n in 1..=3 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let exact = SQRT_2 * 2.0 * (1.0 - sign) / (PI * (n as f64).powi(3));
            assert!((z[n - 1] - exact).abs() < 1e-6, "n = {n}: {} vs {exact}", z[n - 1]);
        }
    }

    #[test]
    fn project_rejects_coarse_grid() {
        assert!(matches!(project(&[0.0; 15], 4), Err(Error::Resolution { .. })));
    }

    #[test]
    fn reconstruct_inverts_project_for_band_limited_input() {
        let z = SpectralState::new(vec![0.3, -1.2, 0.0, 0.7]);
        let back = project(&z.reconstruct(257), 4).unwrap();
        assert!((&back - &z).max_abs() < 1e-12);
    }

    #[test]
    fn factor_identity_on_diagonal() {
        let sys = heat(0.5, 4, 0.1, 2.0);
        for n in 1..=4 {
            assert_eq!(sys.evolution_factor(n, 1.3, 1.3).unwrap(), 1.0);
        }
    }

    #[test]
    fn factor_classical_heat() {
        let sys = heat(1.0, 1, 1e-6, 1.0);
        let f = sys.evolution_factor(1, 1.0, 1e-6).unwrap();
        assert!((f - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn factor_half_order() {
        let sys = heat(0.5, 2, 0.5, 4.0);
        let f = sys.evolution_factor(2, 4.0, 1.0).unwrap();
        assert!((f - (-8.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn factor_rejects_reversed_times() {
        let sys = heat(0.5, 2, 0.5, 4.0);
        assert!(matches!(sys.evolution_factor(1, 1.0, 2.0), Err(Error::Ordering { .. })));
    }

    #[test]
    fn apply_classical_two_modes() {
        let sys = heat(1.0, 2, 0.5, 2.0);
        let out = sys.apply_evolution(1.5, 0.5, &SpectralState::new(vec![1.0, 1.0])).unwrap();
        assert!((out[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((out[1] - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn norm_bound_zero_potential() {
        assert_eq!(heat(0.7, 8, 0.01, 1.0).operator_norm_bound().unwrap(), 1.0);
    }

    #[test]
    fn norm_bound_positive_potential() {
        let sys = EvolutionSystem::new(order(0.5), 8, ScalarFunction::constant(5.0), 0.01, 1.0).unwrap();
        assert_eq!(sys.operator_norm_bound().unwrap(), 1.0);
    }

    #[test]
    fn norm_bound_negative_potential() {
        // p ≡ −2: the first mode grows like e^{(2 − 1)(t − s)}, maximal over the full horizon.
        let sys = EvolutionSystem::new(order(1.0), 4, ScalarFunction::constant(-2.0), 1.0, 2.0).unwrap();
        let m = sys.operator_norm_bound().unwrap();
        assert!((m - 1f64.exp()).abs() < 1e-12, "{m}");
        // p ≡ −1 exactly cancels the first eigenvalue.
        let sys = EvolutionSystem::new(order(1.0), 4, ScalarFunction::constant(-1.0), 1.0, 2.0).unwrap();
        assert!((sys.operator_norm_bound().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn system_validation() {
        let p = ScalarFunction::constant(0.0);
        assert!(EvolutionSystem::new(order(1.0), 0, p.clone(), 0.1, 1.0).is_err());
        assert!(EvolutionSystem::new(order(1.0), 4, p.clone(), 0.0, 1.0).is_err());
        assert!(EvolutionSystem::new(order(1.0), 4, p, 1.0, 1.0).is_err());
        let tab = ScalarFunction::tabulated(vec![0.5, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            EvolutionSystem::new(order(1.0), 4, tab, 0.1, 1.0),
            Err(Error::Range(_))
        ));
    }
}
