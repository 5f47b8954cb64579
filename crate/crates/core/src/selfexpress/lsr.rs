//! Least-squares-regression coding, closed form: minimizers of
//! `λ‖C‖_F² + ‖X − XC‖_F²`, with or without `diag(C) = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CoefficientMatrix;
use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsrVariant {
    /// Zero-diagonal constraint.
    Lsr1,
    /// Unconstrained ridge: `C = (XᵀX + λI)⁻¹XᵀX`.
    Lsr2,
}

pub fn solve_lsr<T: Real>(
    x: &DataMatrix<T>,
    lambda: T,
    variant: LsrVariant,
) -> Result<CoefficientMatrix<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let gram = x.gram();
    let n = gram.nrows();
    let mut system = gram.clone();
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    let z = system.cholesky().ok_or(Error::Singular)?.inverse();
    let c = match variant {
        LsrVariant::Lsr2 => &z * gram,
        // Cᵢⱼ = −Zᵢⱼ / Zⱼⱼ off the diagonal
        LsrVariant::Lsr1 => DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                T::zero()
            } else {
                -z[(i, j)] / z[(j, j)]
            }
        }),
    };
    CoefficientMatrix::new(c)
}
