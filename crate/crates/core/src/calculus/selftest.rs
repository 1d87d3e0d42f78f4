//! Randomized verification of the conformable rule set.
//!
//! Every rule is checked twice: against a second analytic route (tolerance
//! [`ANALYTIC_TOLERANCE`]) and against the symmetric limit quotient at
//! `ε = 1e-6` (tolerance [`ORACLE_TOLERANCE`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    alpha_integrate, conformable_derivative, conformable_derivative_limit, leibniz_alpha,
    leibniz_direct, matrix_inverse_alpha_derivative, Compose, Differentiable, FnPair,
    FractionalOrder, LinearCombination, MatrixFunction, Product, Quotient, ScalarFunction,
    SeparableKernel,
};
use crate::error::Result;

pub const ANALYTIC_TOLERANCE: f64 = 1e-8;
pub const ORACLE_TOLERANCE: f64 = 1e-4;
pub const ORACLE_EPSILON: f64 = 1e-6;
pub const FUNDAMENTAL_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_INSTANCES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleCheck {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestSummary {
    pub seed: u64,
    pub instances_per_rule: usize,
    pub checks: Vec<RuleCheck>,
}

impl SelftestSummary {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&RuleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    instances: usize,
    max_deviation: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            instances: 0,
            max_deviation: 0.0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.instances += 1;
        let dev = (lhs - rhs).abs();
        // NaN must fail the check.
        self.max_deviation = if dev.is_nan() { f64::NAN } else { self.max_deviation.max(dev) };
    }

    fn finish(self) -> RuleCheck {
        RuleCheck {
            name: self.name.to_string(),
            instances: self.instances,
            max_deviation: self.max_deviation,
            tolerance: self.tolerance,
            passed: self.instances > 0 && self.max_deviation <= self.tolerance,
        }
    }
}

fn random_function(rng: &mut ChaCha8Rng) -> ScalarFunction {
    match rng.random_range(0..4) {
        0 => {
            let degree = rng.random_range(1..=3);
            ScalarFunction::polynomial((0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect())
        }
        1 => ScalarFunction::scaled_monomial(rng.random_range(-2.0..2.0), rng.random_range(0.5..3.0)),
        2 => ScalarFunction::Sinusoid {
            amplitude: rng.random_range(-2.0..2.0),
            frequency: rng.random_range(0.2..2.0),
            phase: rng.random_range(0.0..std::f64::consts::PI),
        },
        _ => ScalarFunction::polynomial(vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)]),
    }
}

/// Strictly positive on `[0, ∞)`, at least 1.
fn random_denominator(rng: &mut ChaCha8Rng) -> ScalarFunction {
    ScalarFunction::polynomial(vec![
        rng.random_range(1.0..2.0),
        rng.random_range(0.0..1.0),
        rng.random_range(0.0..0.5),
    ])
}

fn random_order(rng: &mut ChaCha8Rng) -> FractionalOrder {
    let alpha = if rng.random_bool(0.2) { 1.0 } else { rng.random_range(0.1..1.0) };
    FractionalOrder::new(alpha).expect("alpha drawn inside (0, 1]")
}

/// Runs the full rule suite with `instances` random draws per rule.
pub fn run_rule_suite(seed: u64, instances: usize) -> Result<SelftestSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = ORACLE_EPSILON;
    let mut checks = Vec::new();

    let mut lin_a = Tally::new("linearity/analytic", ANALYTIC_TOLERANCE);
    let mut lin_o = Tally::new("linearity/oracle", ORACLE_TOLERANCE);
    let mut const_a = Tally::new("constant/analytic", 0.0);
    let mut const_o = Tally::new("constant/oracle", 0.0);
    let mut prod_a = Tally::new("product/analytic", ANALYTIC_TOLERANCE);
    let mut prod_o = Tally::new("product/oracle", ORACLE_TOLERANCE);
    let mut quot_a = Tally::new("quotient/analytic", ANALYTIC_TOLERANCE);
    let mut quot_o = Tally::new("quotient/oracle", ORACLE_TOLERANCE);
    let mut weight_o = Tally::new("classical-weight/oracle", ORACLE_TOLERANCE);
    let mut unit_a = Tally::new("transform-unit/analytic", ANALYTIC_TOLERANCE);
    let mut unit_o = Tally::new("transform-unit/oracle", ORACLE_TOLERANCE);
    let mut chain_a = Tally::new("chain/analytic", ANALYTIC_TOLERANCE);
    let mut chain_o = Tally::new("chain/oracle", ORACLE_TOLERANCE);
    let mut leib_a = Tally::new("leibniz/analytic", ANALYTIC_TOLERANCE);
    let mut leib_o = Tally::new("leibniz/oracle", ORACLE_TOLERANCE);
    let mut fund_o = Tally::new("fundamental-theorem/oracle", FUNDAMENTAL_TOLERANCE);
    let mut right_o = Tally::new("right-derivative/oracle", ORACLE_TOLERANCE);
    let mut minv_o = Tally::new("matrix-inverse/oracle", ORACLE_TOLERANCE);

    for _ in 0..instances {
        let order = random_order(&mut rng);
        let alpha = order.alpha();
        let base = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.4) };
        let t = rng.random_range(0.6..3.0);
        let f = random_function(&mut rng);
        let g = random_function(&mut rng);

        let df = conformable_derivative(&f, order, t, base)?;
        let dg = conformable_derivative(&g, order, t, base)?;
        let (fv, gv) = (f.value(t)?, g.value(t)?);

        // (1) linearity
        let (c, d) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let comb = LinearCombination {
            f: &f,
            g: &g,
            scale_f: c,
            scale_g: d,
        };
        let rule = c * df + d * dg;
        lin_a.record(conformable_derivative(&comb, order, t, base)?, rule);
        lin_o.record(conformable_derivative_limit(&comb, order, t, base, eps)?, rule);

        // (2) constants
        let beta = ScalarFunction::constant(rng.random_range(-10.0..10.0));
        const_a.record(conformable_derivative(&beta, order, t, base)?, 0.0);
        const_o.record(conformable_derivative_limit(&beta, order, t, base, eps)?, 0.0);

        // (3) product
        let prod = Product(&f, &g);
        let rule = fv * dg + gv * df;
        prod_a.record(conformable_derivative(&prod, order, t, base)?, rule);
        prod_o.record(conformable_derivative_limit(&prod, order, t, base, eps)?, rule);

        // (4) quotient, denominator bounded away from zero
        let den = random_denominator(&mut rng);
        let (hv, dh) = (den.value(t)?, conformable_derivative(&den, order, t, base)?);
        let quot = Quotient(&f, &den);
        let rule = (hv * df - fv * dh) / (hv * hv);
        quot_a.record(conformable_derivative(&quot, order, t, base)?, rule);
        quot_o.record(conformable_derivative_limit(&quot, order, t, base, eps)?, rule);

        // (5) T_α f = (t − a)^{1−α} f′
        weight_o.record(conformable_derivative_limit(&f, order, t, base, eps)?, df);

        // (6) T_α^a((t − a)^α/α) = 1
        let shifted = FnPair {
            value: move |x: f64| (x - base).powf(alpha) / alpha,
            derivative: move |x: f64| (x - base).powf(alpha - 1.0),
        };
        unit_a.record(conformable_derivative(&shifted, order, t, base)?, 1.0);
        unit_o.record(conformable_derivative_limit(&shifted, order, t, base, eps)?, 1.0);

        // chain rule, inner function kept above the base point
        let inner = ScalarFunction::polynomial(vec![
            base + rng.random_range(0.5..2.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..0.5),
        ]);
        let composite = Compose {
            outer: &f,
            inner: &inner,
        };
        let gt = inner.value(t)?;
        let rule = conformable_derivative(&f, order, gt, base)?
            * conformable_derivative(&inner, order, t, base)?
            * (gt - base).powf(alpha - 1.0);
        chain_a.record(conformable_derivative(&composite, order, t, base)?, rule);
        chain_o.record(conformable_derivative_limit(&composite, order, t, base, eps)?, rule);

        // Leibniz rule for ∫_{a(t)}^{b(t)} Σ φ_i(t) s^{k_i} d(s, α)
        let tl = rng.random_range(1.0..3.0);
        let powers = [rng.random_range(0..3), rng.random_range(0..3)];
        let phis = [random_function(&mut rng), random_function(&mut rng)];
        let kernel = SeparableKernel::new(
            phis.iter()
                .zip(powers)
                .map(|(phi, k)| (phi.clone(), ScalarFunction::monomial(k as f64)))
                .collect(),
        );
        let lower = ScalarFunction::polynomial(vec![rng.random_range(0.2..0.6), rng.random_range(0.0..0.2)]);
        let upper = ScalarFunction::polynomial(vec![rng.random_range(1.0..2.0), rng.random_range(0.0..1.0)]);
        let expanded = leibniz_alpha(&kernel, &lower, &upper, order, tl)?;
        let closed = leibniz_closed_form(&phis, &powers, &lower, &upper, alpha, tl)?;
        leib_a.record(expanded, closed);
        leib_o.record(leibniz_direct(&kernel, &lower, &upper, order, tl, eps)?, expanded);

        // fundamental theorem: T_α ∫_{a0}^t f d(s, α) = f(t)
        let a0 = rng.random_range(0.05..0.5);
        let integral = FnPair {
            value: |x: f64| alpha_integrate(order, a0, x, 32, |s| f.value(s)).unwrap_or(f64::NAN),
            derivative: |_x: f64| f64::NAN,
        };
        fund_o.record(conformable_derivative_limit(&integral, order, t, 0.0, eps)?, fv);

        // right derivative ending at b: −(b − t)^{1−α} f′(t)
        let end = t + rng.random_range(0.2..1.5);
        let analytic_right = -(end - t).powf(1.0 - alpha) * f.derivative(t)?;
        let step = eps * (end - t).powf(1.0 - alpha);
        let limit_right = -(f.value(t + step)? - f.value(t - step)?) / (2.0 * eps);
        right_o.record(limit_right, analytic_right);

        // matrix inverse, diagonally dominant 2x2
        let entries = vec![
            ScalarFunction::polynomial(vec![rng.random_range(3.0..4.0), rng.random_range(0.0..1.0)]),
            ScalarFunction::sinusoid(rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5)),
            ScalarFunction::polynomial(vec![rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3)]),
            ScalarFunction::polynomial(vec![rng.random_range(3.0..4.0), 0.0, rng.random_range(0.0..0.3)]),
        ];
        let u = MatrixFunction::new(2, entries)?;
        let rule = matrix_inverse_alpha_derivative(&u, order, t)?;
        let h = 1e-6 * t.max(1.0);
        let plus = u.value(t + h)?.try_inverse().expect("diagonally dominant");
        let minus = u.value(t - h)?.try_inverse().expect("diagonally dominant");
        let fd = (plus - minus) * (order.weight(t).recip() / (2.0 * h));
        minv_o.record((rule - fd).amax(), 0.0);
    }

    checks.extend(
        [
            lin_a, lin_o, const_a, const_o, prod_a, prod_o, quot_a, quot_o, weight_o, unit_a, unit_o,
            chain_a, chain_o, leib_a, leib_o, fund_o, right_o, minv_o,
        ]
        .into_iter()
        .map(Tally::finish),
    );
    Ok(SelftestSummary {
        seed,
        instances_per_rule: instances,
        checks,
    })
}

/// `t^{1−α} G′(t)` from the closed-form antiderivative of `s^{k+α−1}`.
fn leibniz_closed_form(
    phis: &[ScalarFunction],
    powers: &[i32],
    lower: &ScalarFunction,
    upper: &ScalarFunction,
    alpha: f64,
    t: f64,
) -> Result<f64> {
    let (a, b) = (lower.value(t)?, upper.value(t)?);
    let (da, db) = (lower.derivative(t)?, upper.derivative(t)?);
    let mut g_prime = 0.0;
    for (phi, &k) in phis.iter().zip(powers) {
        let p = k as f64 + alpha;
        let antiderivative = (b.powf(p) - a.powf(p)) / p;
        let moving = b.powf(p - 1.0) * db - a.powf(p - 1.0) * da;
        g_prime += phi.derivative(t)? * antiderivative + phi.value(t)? * moving;
    }
    Ok(t.powf(1.0 - alpha) * g_prime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_counts_instances() {
        let summary = run_rule_suite(7, 20).unwrap();
        for c in &summary.checks {
            assert!(c.passed, "{c:?}");
            assert_eq!(c.instances, 20);
        }
        assert_eq!(summary.passed(), summary.checks.len());
    }

    #[test]
    fn suite_is_deterministic() {
        assert_eq!(run_rule_suite(3, 5).unwrap(), run_rule_suite(3, 5).unwrap());
    }
}
