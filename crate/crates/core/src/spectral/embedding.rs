use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::AffinityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relaxed cluster indicators: `N×n`, `D`-orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<T: Real> {
    values: DMatrix<T>,
    eigenvalues: Vec<T>,
}

impl<T: Real> Embedding<T> {
    pub fn from_points(values: DMatrix<T>) -> Self {
        let k = values.ncols();
        Self {
            values,
            eigenvalues: vec![T::zero(); k],
        }
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    /// Generalized eigenvalues of `(L, D)` for the kept columns, ascending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn n_points(&self) -> usize {
        self.values.nrows()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmbeddingOptions<T: Real> {
    /// When set, `D ← D + εI` so that isolated vertices are admissible.
    pub degree_regularization: Option<T>,
}

impl<T: Real> EmbeddingOptions<T> {
    pub const REGULARIZED_EPSILON: f64 = 1e-10;

    pub fn regularized() -> Self {
        Self {
            degree_regularization: Some(T::lit(Self::REGULARIZED_EPSILON)),
        }
    }
}

/// Minimizes `trace(QᵀLQ)` subject to `QᵀDQ = I`: the `n` generalized
/// eigenvectors of `(L, D)` with smallest eigenvalues, obtained from the
/// symmetric matrix `D^{-1/2} L D^{-1/2}` and mapped back by `D^{-1/2}`.
pub fn spectral_embedding<T: Real>(
    a: &AffinityMatrix<T>,
    n_clusters: usize,
    opts: &EmbeddingOptions<T>,
) -> Result<Embedding<T>> {
    let size = a.n();
    if n_clusters == 0 || n_clusters > size {
        return Err(Error::InvalidParameter(format!(
            "cluster count {n_clusters} must lie in 1..={size}"
        )));
    }
    let eps = opts.degree_regularization.unwrap_or_else(T::zero);
    let mut inv_sqrt = Vec::with_capacity(size);
    for (j, &d) in a.degree().iter().enumerate() {
        let d = d + eps;
        if !(d > T::zero()) {
            return Err(Error::IsolatedVertex(j));
        }
        inv_sqrt.push(T::one() / d.sqrt());
    }
    let l = a.laplacian();
    let sym = DMatrix::from_fn(size, size, |i, j| inv_sqrt[i] * l[(i, j)] * inv_sqrt[j]);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&p, &q| {
        eig.eigenvalues[p]
            .partial_cmp(&eig.eigenvalues[q])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(p.cmp(&q))
    });
    let kept = &order[..n_clusters];
    let values = DMatrix::from_fn(size, n_clusters, |i, k| {
        inv_sqrt[i] * eig.eigenvectors[(i, kept[k])]
    });
    Ok(Embedding {
        values,
        eigenvalues: kept.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}
