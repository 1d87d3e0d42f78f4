//! Conformable fractional calculus.
//!
//! For an order `α ∈ (0, 1]` the left conformable derivative based at `a` is
//! `(t − a)^{1−α} f′(t)` for differentiable `f`, and the α-integral carries
//! the weight `s^{α−1}`. Both become classical in the transformed time
//! `τ = t^α/α`, which is how every integral in this crate is evaluated.

mod function;
mod matrix;
pub mod quadrature;
pub mod selftest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use function::{
    Compose, Differentiable, FnPair, LinearCombination, Product, Quotient, ScalarFunction,
    CENTRAL_DIFFERENCE_STEP,
};
pub use matrix::{matrix_inverse_alpha_derivative, MatrixFunction, SINGULARITY_CONDITION_LIMIT};
use quadrature::GaussLegendre;

/// Nodes per Gauss–Legendre panel used by the α-integral.
pub const PANEL_ORDER: usize = 8;

/// Order `α` of a conformable derivative, `0 < α ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!("alpha must lie in (0,1], got {alpha}")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    /// `t ↦ t^α/α`, strictly increasing on `t > 0`.
    pub fn transform(self, t: f64) -> f64 {
        if self.0 == 1.0 {
            t
        } else {
            t.powf(self.0) / self.0
        }
    }

    /// Inverse of [`Self::transform`]: `τ ↦ (ατ)^{1/α}`.
    pub fn inverse_transform(self, tau: f64) -> f64 {
        if self.0 == 1.0 {
            tau
        } else {
            (self.0 * tau).powf(1.0 / self.0)
        }
    }

    /// The α-measure density `t^{α−1}`.
    pub fn weight(self, t: f64) -> f64 {
        if self.0 == 1.0 {
            1.0
        } else {
            t.powf(self.0 - 1.0)
        }
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(order: FractionalOrder) -> f64 {
        order.0
    }
}

/// Strictly increasing time nodes on `[a, b]` with `a > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    order: FractionalOrder,
    nodes: Vec<f64>,
    transformed: Vec<f64>,
}

impl AlphaGrid {
    /// `count` nodes equally spaced in transformed time between `a` and `b`.
    pub fn uniform_in_transformed_time(
        order: FractionalOrder,
        a: f64,
        b: f64,
        count: usize,
    ) -> Result<Self> {
        check_positive_interval(a, b)?;
        if count < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 nodes, got {count}")));
        }
        let (ta, tb) = (order.transform(a), order.transform(b));
        let step = (tb - ta) / (count - 1) as f64;
        let mut transformed: Vec<f64> = (0..count).map(|k| ta + step * k as f64).collect();
        transformed[count - 1] = tb;
        let mut nodes: Vec<f64> = transformed.iter().map(|&tau| order.inverse_transform(tau)).collect();
        nodes[0] = a;
        nodes[count - 1] = b;
        Self::from_parts(order, nodes, transformed)
    }

    pub fn from_nodes(order: FractionalOrder, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain("grid needs at least 2 nodes".into()));
        }
        check_positive_interval(nodes[0], nodes[nodes.len() - 1])?;
        let transformed = nodes.iter().map(|&t| order.transform(t)).collect();
        Self::from_parts(order, nodes, transformed)
    }

    fn from_parts(order: FractionalOrder, nodes: Vec<f64>, transformed: Vec<f64>) -> Result<Self> {
        if nodes.windows(2).any(|w| w[1] <= w[0]) || transformed.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid nodes must be strictly increasing".into()));
        }
        Ok(Self {
            order,
            nodes,
            transformed,
        })
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nodes in transformed time `τ = t^α/α`.
    pub fn transformed(&self) -> &[f64] {
        &self.transformed
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

fn check_positive_interval(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "lower limit must be positive (the weight s^(alpha-1) is singular at 0), got {a}"
        )));
    }
    if !(b >= a && b.is_finite()) {
        return Err(Error::Domain(format!("interval [{a}, {b}] is empty or not finite")));
    }
    Ok(())
}

/// Left conformable derivative `T_α^base f(t) = (t − base)^{1−α} f′(t)`.
pub fn conformable_derivative<F: Differentiable>(
    f: &F,
    order: FractionalOrder,
    t: f64,
    base: f64,
) -> Result<f64> {
    if !(t > base) {
        return Err(Error::Domain(format!("derivative needs t > base, got t = {t}, base = {base}")));
    }
    let df = f.derivative(t)?;
    Ok(base_weight(order, t - base) * df)
}

fn base_weight(order: FractionalOrder, dt: f64) -> f64 {
    if order.alpha() == 1.0 {
        1.0
    } else {
        dt.powf(1.0 - order.alpha())
    }
}

/// Symmetric difference quotient of the defining limit,
/// `(f(t + ε w) − f(t − ε w)) / 2ε` with `w = (t − base)^{1−α}`.
pub fn conformable_derivative_limit<F: Differentiable>(
    f: &F,
    order: FractionalOrder,
    t: f64,
    base: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(t > base) {
        return Err(Error::Domain(format!("derivative needs t > base, got t = {t}, base = {base}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let step = epsilon * base_weight(order, t - base);
    let plus = f.value(t + step).map_err(to_range)?;
    let minus = f.value(t - step).map_err(to_range)?;
    Ok((plus - minus) / (2.0 * epsilon))
}

fn to_range(err: Error) -> Error {
    match err {
        Error::Domain(msg) => Error::Range(msg),
        other => other,
    }
}

/// α-integral `∫_a^b f(x) x^{α−1} dx` of a closure, with `panels` Gauss–Legendre
/// panels laid out uniformly in transformed time. `b < a` integrates backwards.
pub fn alpha_integrate<F>(order: FractionalOrder, a: f64, b: f64, panels: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (lo, hi, sign) = if b >= a { (a, b, 1.0) } else { (b, a, -1.0) };
    check_positive_interval(lo, hi)?;
    if panels == 0 {
        return Err(Error::Domain("panels must be at least 1".into()));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    let (ta, tb) = (order.transform(lo), order.transform(hi));
    let h = (tb - ta) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let p0 = ta + h * k as f64;
        let p1 = if k + 1 == panels { tb } else { p0 + h };
        for (tau, w) in rule.mapped(p0, p1) {
            total += w * f(order.inverse_transform(tau))?;
        }
    }
    Ok(sign * total)
}

/// `∫_a^b f(x) x^{α−1} dx` for `0 < a ≤ b`.
pub fn conformable_integral<F: Differentiable>(
    f: &F,
    order: FractionalOrder,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64> {
    if b < a {
        return Err(Error::Domain(format!("integral needs a <= b, got a = {a}, b = {b}")));
    }
    alpha_integrate(order, a, b, panels, |x| f.value(x))
}

/// A function `h(t, s)` with its classical partial derivative in `t`.
pub trait Bivariate {
    fn value(&self, t: f64, s: f64) -> Result<f64>;
    fn partial_t(&self, t: f64, s: f64) -> Result<f64>;
}

/// `h(t, s) = Σ_i φ_i(t) ψ_i(s)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeparableKernel {
    pub terms: Vec<(ScalarFunction, ScalarFunction)>,
}

impl SeparableKernel {
    pub fn new(terms: Vec<(ScalarFunction, ScalarFunction)>) -> Self {
        Self { terms }
    }
}

impl Bivariate for SeparableKernel {
    fn value(&self, t: f64, s: f64) -> Result<f64> {
        self.terms
            .iter()
            .map(|(phi, psi)| Ok(phi.value(t)? * psi.value(s)?))
            .sum()
    }

    fn partial_t(&self, t: f64, s: f64) -> Result<f64> {
        self.terms
            .iter()
            .map(|(phi, psi)| Ok(phi.derivative(t)? * psi.value(s)?))
            .sum()
    }
}

/// Panels used for the integrals inside the Leibniz rule.
const LEIBNIZ_PANELS: usize = 64;

/// Expanded conformable Leibniz rule for `G(t) = ∫_{a(t)}^{b(t)} h(t, s) d(s, α)`:
///
/// `T_α G(t) = ∫ T_α h(t, s) d(s, α) + h(t, b) b^{α−1} T_α b(t) − h(t, a) a^{α−1} T_α a(t)`.
///
/// The boundary weights `b^{α−1}`, `a^{α−1}` are the α-measure density at the
/// moving limits; they are 1 when `α = 1`.
pub fn leibniz_alpha<H, A, B>(
    h: &H,
    lower: &A,
    upper: &B,
    order: FractionalOrder,
    t: f64,
) -> Result<f64>
where
    H: Bivariate,
    A: Differentiable,
    B: Differentiable,
{
    let a = lower.value(t)?;
    let b = upper.value(t)?;
    let t_weight = base_weight(order, t);
    let interior = alpha_integrate(order, a, b, LEIBNIZ_PANELS, |s| Ok(t_weight * h.partial_t(t, s)?))?;
    let upper_term = h.value(t, b)? * order.weight(b) * conformable_derivative(upper, order, t, 0.0)?;
    let lower_term = h.value(t, a)? * order.weight(a) * conformable_derivative(lower, order, t, 0.0)?;
    Ok(interior + upper_term - lower_term)
}

/// `T_α G(t)` for the same `G`, computed directly from the defining limit at
/// step `epsilon`; the independent side of the Leibniz check.
pub fn leibniz_direct<H, A, B>(
    h: &H,
    lower: &A,
    upper: &B,
    order: FractionalOrder,
    t: f64,
    epsilon: f64,
) -> Result<f64>
where
    H: Bivariate,
    A: Differentiable,
    B: Differentiable,
{
    let g = |x: f64| -> Result<f64> {
        let (a, b) = (lower.value(x)?, upper.value(x)?);
        alpha_integrate(order, a, b, LEIBNIZ_PANELS, |s| h.value(x, s))
    };
    if !(t > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Domain(format!("need t > 0 and epsilon > 0, got t = {t}, epsilon = {epsilon}")));
    }
    let step = epsilon * base_weight(order, t);
    Ok((g(t + step)? - g(t - step)?) / (2.0 * epsilon))
}
