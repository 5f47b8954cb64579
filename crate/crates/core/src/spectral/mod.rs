//! Spectral stage: affinity and Laplacian, the relaxed embedding under
//! `QᵀDQ = I`, k-means quantization (with and without pairwise
//! constraints) and the subspace-structured norm.

mod affinity;
mod embedding;
mod kmeans;

use nalgebra::DMatrix;

use crate::dataset::Labels;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::selfexpress::CoefficientMatrix;

pub use affinity::{affinity_from_coefficients, AffinityMatrix};
pub use embedding::{spectral_embedding, Embedding, EmbeddingOptions};
pub use kmeans::{constrained_kmeans, kmeans, KMeansOptions};

/// Binary `N×n` cluster indicator, one 1 per row. Stored as labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationMatrix {
    labels: Labels,
}

impl SegmentationMatrix {
    pub fn from_labels(labels: Labels) -> Self {
        Self { labels }
    }

    /// Reads a 0/1 indicator matrix; every row must hold exactly one 1.
    pub fn from_matrix<T: Real>(q: &DMatrix<T>) -> Result<Self> {
        let mut assignments = Vec::with_capacity(q.nrows());
        for (i, row) in q.row_iter().enumerate() {
            let mut hit = None;
            for (k, &v) in row.iter().enumerate() {
                if v == T::one() {
                    if hit.is_some() {
                        return Err(Error::InvalidLabels(format!("row {i} has several ones")));
                    }
                    hit = Some(k);
                } else if v != T::zero() {
                    return Err(Error::InvalidLabels(format!("row {i} is not binary")));
                }
            }
            assignments
                .push(hit.ok_or_else(|| Error::InvalidLabels(format!("row {i} has no one")))?);
        }
        Ok(Self {
            labels: Labels::new(assignments, q.ncols().max(1))?,
        })
    }

    pub fn to_matrix<T: Real>(&self) -> DMatrix<T> {
        let mut q = DMatrix::zeros(self.labels.len(), self.labels.n_clusters());
        for (i, &a) in self.labels.as_slice().iter().enumerate() {
            q[(i, a)] = T::one();
        }
        q
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.n_clusters()
    }
}

/// `‖C‖_Q = Σᵢⱼ |Cᵢⱼ|·½‖q⁽ⁱ⁾ − q⁽ʲ⁾‖²`: total coefficient magnitude that
/// crosses segment boundaries.
pub fn subspace_structured_norm<T: Real>(
    c: &CoefficientMatrix<T>,
    q: &SegmentationMatrix,
) -> Result<T> {
    let n = c.n();
    if q.n_points() != n {
        return Err(Error::DimensionMismatch(format!(
            "segmentation has {} points, coefficients have {n}",
            q.n_points()
        )));
    }
    let l = q.labels();
    let v = c.values();
    let mut total = T::zero();
    for j in 0..n {
        for i in 0..n {
            if l.get(i) != l.get(j) {
                total += v[(i, j)].abs();
            }
        }
    }
    Ok(total)
}
