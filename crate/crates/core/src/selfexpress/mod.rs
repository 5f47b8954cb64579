//! Self-expressive coding: the weighted sparse problem solved by ADMM,
//! structured-norm weight coupling, the `λ₀ → λ` scaling rule and the
//! least-squares-regression baselines.

mod admm;
mod lsr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, WeightMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::SegmentationMatrix;

pub use admm::{solve_weighted_sparse, SparseSolution};
pub use lsr::{solve_lsr, LsrVariant};

/// Default ADMM penalty.
pub const DEFAULT_RHO: f64 = 100.0;
pub const DEFAULT_MAX_ITERS: usize = 2000;
pub const DEFAULT_TOL_ABS: f64 = 1e-6;
pub const DEFAULT_TOL_REL: f64 = 1e-4;

/// `N×N` self-expressive coefficients; column `j` reconstructs sample `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> CoefficientMatrix<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    pub fn max_abs_diagonal(&self) -> T {
        self.values
            .diagonal()
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    /// `(λ/2)‖X − XC‖_F²`
    #[default]
    Frobenius,
    /// `λ‖X − XC‖₁`
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SolverOptions<T: Real> {
    pub lambda: T,
    pub rho: T,
    pub max_iters: usize,
    pub tol_abs: T,
    pub tol_rel: T,
    pub error_norm: ErrorNorm,
    /// Residual balancing: `ρ` starts at `rho` and is doubled or halved
    /// when one residual dominates the other by 10×.
    #[serde(default = "default_adaptive")]
    pub adaptive_rho: bool,
}

fn default_adaptive() -> bool {
    true
}

impl<T: Real> SolverOptions<T> {
    pub fn new(lambda: T) -> Self {
        Self {
            lambda,
            rho: T::lit(DEFAULT_RHO),
            max_iters: DEFAULT_MAX_ITERS,
            tol_abs: T::lit(DEFAULT_TOL_ABS),
            tol_rel: T::lit(DEFAULT_TOL_REL),
            error_norm: ErrorNorm::Frobenius,
            adaptive_rho: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite_value() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )))
            }
        };
        positive("lambda", self.lambda)?;
        positive("rho", self.rho)?;
        positive("tol_abs", self.tol_abs)?;
        if !(self.tol_rel >= T::zero()) {
            return Err(Error::InvalidParameter(
                "tol_rel must be nonnegative".into(),
            ));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `λ = λ₀ / min_j max_{i≠j} x_iᵀx_j`.
pub fn lambda_from_lambda0<T: Real>(x: &DataMatrix<T>, lambda0: T) -> Result<T> {
    if !(lambda0 > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "lambda0 = {lambda0} must be positive"
        )));
    }
    let g = x.gram();
    let n = g.ncols();
    let denom = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| i != j)
                .map(|i| g[(i, j)])
                .fold(T::min_value().unwrap(), |a, b| a.max(b))
        })
        .fold(T::max_value().unwrap(), |a, b| a.min(b));
    if !(denom > T::zero()) {
        return Err(Error::DegenerateScaling(denom.as_f64()));
    }
    Ok(lambda0 / denom)
}

/// Elementwise weights `Ψᵢⱼ + α·θᵢⱼ`, where `θᵢⱼ = ½‖q⁽ⁱ⁾ − q⁽ʲ⁾‖²` is 1
/// when `i` and `j` sit in different segments and 0 otherwise.
pub fn combine_structured_weights<T: Real>(
    psi: &WeightMatrix<T>,
    q: &SegmentationMatrix,
    alpha: T,
) -> Result<DMatrix<T>> {
    let n = psi.values().nrows();
    if q.n_points() != n {
        return Err(Error::DimensionMismatch(format!(
            "segmentation has {} points, weights have {n}",
            q.n_points()
        )));
    }
    let labels = q.labels();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let theta = if labels.get(i) == labels.get(j) {
            T::zero()
        } else {
            T::one()
        };
        psi.values()[(i, j)] + alpha * theta
    }))
}

/// `Σ|Wᵢⱼ Cᵢⱼ| + (λ/2)‖X − XC‖_F²` or `Σ|Wᵢⱼ Cᵢⱼ| + λ‖X − XC‖₁`.
///
/// Entries with `Cᵢⱼ = 0` contribute nothing even when `Wᵢⱼ` is infinite.
pub fn objective<T: Real>(
    x: &DataMatrix<T>,
    c: &DMatrix<T>,
    w: &DMatrix<T>,
    lambda: T,
    norm: ErrorNorm,
) -> T {
    let penalty = c
        .iter()
        .zip(w.iter())
        .filter(|(c, _)| **c != T::zero())
        .fold(T::zero(), |acc, (c, w)| acc + c.abs() * *w);
    let residual = x.values() - x.values() * c;
    let fit = match norm {
        ErrorNorm::Frobenius => lambda * residual.norm_squared() / T::lit(2.0),
        ErrorNorm::L1 => lambda * residual.iter().fold(T::zero(), |a, v| a + v.abs()),
    };
    penalty + fit
}
