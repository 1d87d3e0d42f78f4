//! Real functions of one variable with exact first derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real function together with its classical derivative.
///
/// Conformable derivatives of differentiable functions reduce to a weighted
/// classical derivative, so every operation in [`super`] only needs these two
/// evaluations.
pub trait Differentiable {
    fn value(&self, t: f64) -> Result<f64>;
    fn derivative(&self, t: f64) -> Result<f64>;
}

impl<F: Differentiable + ?Sized> Differentiable for &F {
    fn value(&self, t: f64) -> Result<f64> {
        (**self).value(t)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        (**self).derivative(t)
    }
}

impl<F: Differentiable + ?Sized> Differentiable for Box<F> {
    fn value(&self, t: f64) -> Result<f64> {
        (**self).value(t)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        (**self).derivative(t)
    }
}

/// Descriptor of a real-valued function on a subset of the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction {
    Constant {
        value: f64,
    },
    /// `coeff * t^degree`; non-integer degrees are defined for `t > 0` only.
    Monomial {
        degree: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `Σ coeffs[k] t^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `amplitude * sin(frequency * t + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise-linear interpolation through `(grid[i], values[i])`.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

/// Relative step of the central differences used for tabulated data.
pub const CENTRAL_DIFFERENCE_STEP: f64 = 1e-6;

impl ScalarFunction {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn monomial(degree: f64) -> Self {
        Self::Monomial { degree, coeff: 1.0 }
    }

    pub fn scaled_monomial(coeff: f64, degree: f64) -> Self {
        Self::Monomial { degree, coeff }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::Polynomial { coeffs }
    }

    pub fn sinusoid(amplitude: f64, frequency: f64) -> Self {
        Self::Sinusoid {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    /// Validates the grid (strictly increasing, matching lengths, at least two points).
    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = Self::Tabulated { grid, values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64], what: &str| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} must be finite")))
            }
        };
        match self {
            Self::Constant { value } => finite(&[*value], "constant value"),
            Self::Monomial { degree, coeff } => finite(&[*degree, *coeff], "monomial parameters"),
            Self::Polynomial { coeffs } => finite(coeffs, "polynomial coefficients"),
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => finite(&[*amplitude, *frequency, *phase], "sinusoid parameters"),
            Self::Tabulated { grid, values } => {
                if grid.len() != values.len() {
                    return Err(Error::Domain(format!(
                        "tabulated grid has {} points but {} values",
                        grid.len(),
                        values.len()
                    )));
                }
                if grid.len() < 2 {
                    return Err(Error::Domain("tabulated grid needs at least two points".into()));
                }
                finite(grid, "tabulated grid")?;
                finite(values, "tabulated values")?;
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Domain("tabulated grid must be strictly increasing".into()));
                }
                Ok(())
            }
        }
    }

    /// Closed interval on which the function may be evaluated.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Tabulated { grid, .. } => (grid[0], grid[grid.len() - 1]),
            Self::Monomial { degree, .. } if degree.fract() != 0.0 => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Lower bound of the function over `[a, b]`, exact for every analytic
    /// descriptor except polynomials of degree above two (sampled there).
    pub fn lower_bound_on(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Self::Constant { value } => Ok(*value),
            Self::Sinusoid { amplitude, .. } => {
                // Sampling is tight enough for the sign decisions this feeds.
                let sampled = self.sampled_min(a, b, 4096)?;
                Ok(sampled.max(-amplitude.abs()))
            }
            Self::Tabulated { grid, values } => {
                let mut lo = self.value(a)?.min(self.value(b)?);
                for (&x, &v) in grid.iter().zip(values) {
                    if x > a && x < b {
                        lo = lo.min(v);
                    }
                }
                Ok(lo)
            }
            _ => self.sampled_min(a, b, 4096),
        }
    }

    fn sampled_min(&self, a: f64, b: f64, samples: usize) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for i in 0..=samples {
            let t = a + (b - a) * i as f64 / samples as f64;
            lo = lo.min(self.value(t)?);
        }
        Ok(lo)
    }

    /// Upper bound of `|f|` over `[a, b]` (sampled for non-constant descriptors).
    pub fn abs_bound_on(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Self::Constant { value } => Ok(value.abs()),
            Self::Sinusoid { amplitude, .. } => Ok(amplitude.abs()),
            _ => {
                let mut hi: f64 = 0.0;
                for i in 0..=4096 {
                    let t = a + (b - a) * i as f64 / 4096.0;
                    hi = hi.max(self.value(t)?.abs());
                }
                Ok(hi)
            }
        }
    }

    fn check_support(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if t < lo || t > hi || t.is_nan() {
            return Err(match self {
                Self::Tabulated { .. } => {
                    Error::Range(format!("t = {t} outside tabulated range [{lo}, {hi}]"))
                }
                _ => Error::Domain(format!("t = {t} outside domain [{lo}, {hi}]")),
            });
        }
        Ok(())
    }

    fn interpolate(grid: &[f64], values: &[f64], t: f64) -> f64 {
        let k = grid.partition_point(|&x| x <= t).clamp(1, grid.len() - 1);
        let (x0, x1) = (grid[k - 1], grid[k]);
        let w = (t - x0) / (x1 - x0);
        values[k - 1] + w * (values[k] - values[k - 1])
    }
}

impl Differentiable for ScalarFunction {
    fn value(&self, t: f64) -> Result<f64> {
        self.check_support(t)?;
        Ok(match self {
            Self::Constant { value } => *value,
            Self::Monomial { degree, coeff } => coeff * t.powf(*degree),
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
            Self::Tabulated { grid, values } => Self::interpolate(grid, values, t),
        })
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        self.check_support(t)?;
        Ok(match self {
            Self::Constant { .. } => 0.0,
            Self::Monomial { degree, coeff } => {
                if *degree == 0.0 {
                    0.0
                } else {
                    coeff * degree * t.powf(degree - 1.0)
                }
            }
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * frequency * (frequency * t + phase).cos(),
            Self::Tabulated { .. } => {
                let h = CENTRAL_DIFFERENCE_STEP * t.abs().max(1.0);
                let (lo, hi) = self.support();
                if t - h < lo || t + h > hi {
                    return Err(Error::Range(format!(
                        "t = {t} too close to the tabulated range boundary [{lo}, {hi}]"
                    )));
                }
                (self.value(t + h)? - self.value(t - h)?) / (2.0 * h)
            }
        })
    }
}

/// `scale_f * f + scale_g * g`.
#[derive(Debug, Clone)]
pub struct LinearCombination<F, G> {
    pub f: F,
    pub g: G,
    pub scale_f: f64,
    pub scale_g: f64,
}

impl<F: Differentiable, G: Differentiable> Differentiable for LinearCombination<F, G> {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.scale_f * self.f.value(t)? + self.scale_g * self.g.value(t)?)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        Ok(self.scale_f * self.f.derivative(t)? + self.scale_g * self.g.derivative(t)?)
    }
}

#[derive(Debug, Clone)]
pub struct Product<F, G>(pub F, pub G);

impl<F: Differentiable, G: Differentiable> Differentiable for Product<F, G> {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.0.value(t)? * self.1.value(t)?)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let (f, g) = (self.0.value(t)?, self.1.value(t)?);
        Ok(self.0.derivative(t)? * g + f * self.1.derivative(t)?)
    }
}

#[derive(Debug, Clone)]
pub struct Quotient<F, G>(pub F, pub G);

impl<F: Differentiable, G: Differentiable> Differentiable for Quotient<F, G> {
    fn value(&self, t: f64) -> Result<f64> {
        let g = self.1.value(t)?;
        if g == 0.0 {
            return Err(Error::Domain(format!("quotient denominator vanishes at t = {t}")));
        }
        Ok(self.0.value(t)? / g)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let (f, g) = (self.0.value(t)?, self.1.value(t)?);
        if g == 0.0 {
            return Err(Error::Domain(format!("quotient denominator vanishes at t = {t}")));
        }
        Ok((self.0.derivative(t)? * g - f * self.1.derivative(t)?) / (g * g))
    }
}

/// `outer(inner(t))`.
#[derive(Debug, Clone)]
pub struct Compose<F, G> {
    pub outer: F,
    pub inner: G,
}

impl<F: Differentiable, G: Differentiable> Differentiable for Compose<F, G> {
    fn value(&self, t: f64) -> Result<f64> {
        self.outer.value(self.inner.value(t)?)
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let g = self.inner.value(t)?;
        Ok(self.outer.derivative(g)? * self.inner.derivative(t)?)
    }
}

/// Adapts a pair of closures `(f, f')`.
pub struct FnPair<F, D> {
    pub value: F,
    pub derivative: D,
}

impl<F, D> Differentiable for FnPair<F, D>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn value(&self, t: f64) -> Result<f64> {
        Ok((self.value)(t))
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        Ok((self.derivative)(t))
    }
}
