use nalgebra::DMatrix;

use super::{conformable_derivative, Differentiable, FractionalOrder, ScalarFunction};
use crate::error::{Error, Result};

/// Condition estimate above which `U(t)` is treated as singular.
pub const SINGULARITY_CONDITION_LIMIT: f64 = 1e12;

/// Square matrix whose entries are scalar functions of `t` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    dim: usize,
    entries: Vec<ScalarFunction>,
}

impl MatrixFunction {
    pub fn new(dim: usize, entries: Vec<ScalarFunction>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Shape(format!(
                "a {dim}x{dim} matrix function needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim * dim)
            .map(|k| ScalarFunction::constant(if k / dim == k % dim { 1.0 } else { 0.0 }))
            .collect();
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, t: f64) -> Result<DMatrix<f64>> {
        self.map_entries(|f| f.value(t))
    }

    /// Entry-wise conformable derivative based at 0.
    pub fn alpha_derivative(&self, order: FractionalOrder, t: f64) -> Result<DMatrix<f64>> {
        self.map_entries(|f| conformable_derivative(f, order, t, 0.0))
    }

    fn map_entries<F>(&self, mut op: F) -> Result<DMatrix<f64>>
    where
        F: FnMut(&ScalarFunction) -> Result<f64>,
    {
        let values = self.entries.iter().map(&mut op).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &values))
    }
}

/// `(U⁻¹)^{(α)}(t) = −U⁻¹(t) U^{(α)}(t) U⁻¹(t)`.
pub fn matrix_inverse_alpha_derivative(
    u: &MatrixFunction,
    order: FractionalOrder,
    t: f64,
) -> Result<DMatrix<f64>> {
    let value = u.value(t)?;
    let singular = value.singular_values();
    let (smax, smin) = (singular.max(), singular.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= SINGULARITY_CONDITION_LIMIT) {
        return Err(Error::Singular {
            condition,
            limit: SINGULARITY_CONDITION_LIMIT,
        });
    }
    let inverse = value.try_inverse().ok_or(Error::Singular {
        condition,
        limit: SINGULARITY_CONDITION_LIMIT,
    })?;
    let du = u.alpha_derivative(order, t)?;
    Ok(-(&inverse * du * &inverse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(alpha: f64) -> FractionalOrder {
        FractionalOrder::new(alpha).unwrap()
    }

    #[test]
    fn identity_has_zero_derivative() {
        let d = matrix_inverse_alpha_derivative(&MatrixFunction::identity(3), order(0.5), 2.0).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn diagonal_t() {
        let t = ScalarFunction::monomial(1.0);
        let zero = ScalarFunction::constant(0.0);
        let u = MatrixFunction::new(2, vec![t.clone(), zero.clone(), zero, t]).unwrap();
        let d = matrix_inverse_alpha_derivative(&u, order(1.0), 2.0).unwrap();
        assert!((d[(0, 0)] + 0.25).abs() < 1e-15);
        assert!((d[(1, 1)] + 0.25).abs() < 1e-15);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn lower_triangular_against_finite_difference() {
        // U = [[t, 0], [1, t]], U⁻¹ = [[1/t, 0], [−1/t², 1/t]].
        let t = ScalarFunction::monomial(1.0);
        let u = MatrixFunction::new(
            2,
            vec![t.clone(), ScalarFunction::constant(0.0), ScalarFunction::constant(1.0), t],
        )
        .unwrap();
        let q = order(0.5);
        let at = 4.0;
        let d = matrix_inverse_alpha_derivative(&u, q, at).unwrap();
        let h = 1e-5;
        let inv = |x: f64| u.value(x).unwrap().try_inverse().unwrap();
        let fd = (inv(at + h) - inv(at - h)) * (at.powf(1.0 - q.alpha()) / (2.0 * h));
        assert!((d - fd).amax() < 1e-5);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let one = ScalarFunction::constant(1.0);
        let u = MatrixFunction::new(2, vec![one.clone(), one.clone(), one.clone(), one]).unwrap();
        assert!(matches!(
            matrix_inverse_alpha_derivative(&u, order(0.5), 1.0),
            Err(Error::Singular { .. })
        ));
    }
}
