use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::selfexpress::CoefficientMatrix;

/// Symmetric nonnegative affinity with its degrees and Laplacian `L = D − A`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix<T: Real> {
    values: DMatrix<T>,
    degree: DVector<T>,
    laplacian: DMatrix<T>,
}

impl<T: Real> AffinityMatrix<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch("affinity must be square".into()));
        }
        let n = values.nrows();
        for j in 0..n {
            for i in 0..n {
                let v = values[(i, j)];
                if !(v >= T::zero()) || !v.is_finite_value() {
                    return Err(Error::InvalidParameter(format!(
                        "affinity entry ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
                if v != values[(j, i)] {
                    return Err(Error::InvalidParameter(format!(
                        "affinity is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let degree = values.column_sum();
        let mut laplacian = -values.clone();
        for i in 0..n {
            laplacian[(i, i)] += degree[i];
        }
        Ok(Self {
            values,
            degree,
            laplacian,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    /// `Dⱼⱼ = Σᵢ Aᵢⱼ`.
    pub fn degree(&self) -> &DVector<T> {
        &self.degree
    }

    pub fn laplacian(&self) -> &DMatrix<T> {
        &self.laplacian
    }
}

/// `A = ½(|C| + |Cᵀ|)`.
pub fn affinity_from_coefficients<T: Real>(c: &CoefficientMatrix<T>) -> AffinityMatrix<T> {
    let v = c.values();
    let half = T::lit(0.5);
    let a = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
        half * (v[(i, j)].abs() + v[(j, i)].abs())
    });
    AffinityMatrix::new(a).expect("symmetrized magnitudes form a valid affinity")
}
