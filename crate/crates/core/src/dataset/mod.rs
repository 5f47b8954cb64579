//! Data ingestion, ground truth, side-information and synthetic data.

mod constraints;
mod io;
mod synthetic;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use constraints::{
    build_weight_matrix, build_weight_matrix_scaled, sample_side_information,
    sample_side_information_bernoulli, Constraint, ConstraintKind, ConstraintSet, WeightMatrix,
};
pub use io::{
    load_constraints, load_labels, load_matrix, write_atomic, write_constraints, write_labels,
    write_matrix, Orientation,
};
pub use synthetic::{generate_union_of_subspaces, SyntheticData, SyntheticSpec};

/// Feature-by-sample matrix: `D` rows, `N` columns, one sample per column.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix<T: Real> {
    values: DMatrix<T>,
    feature_names: Option<Vec<String>>,
    sample_names: Option<Vec<String>>,
}

impl<T: Real> DataMatrix<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        let (d, n) = values.shape();
        if d < 1 {
            return Err(Error::InvalidData("need at least one feature row".into()));
        }
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least two samples, found {n}"
            )));
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite_value() {
                return Err(Error::InvalidData(format!(
                    "non-finite entry at feature {}, sample {}",
                    k % d,
                    k / d
                )));
            }
        }
        Ok(Self {
            values,
            feature_names: None,
            sample_names: None,
        })
    }

    pub fn with_names(
        mut self,
        feature_names: Option<Vec<String>>,
        sample_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(f) = &feature_names {
            if f.len() != self.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "{} feature names for {} features",
                    f.len(),
                    self.dim()
                )));
            }
        }
        if let Some(s) = &sample_names {
            if s.len() != self.n_samples() {
                return Err(Error::DimensionMismatch(format!(
                    "{} sample names for {} samples",
                    s.len(),
                    self.n_samples()
                )));
            }
        }
        self.feature_names = feature_names;
        self.sample_names = sample_names;
        Ok(self)
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples `N`.
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn sample_names(&self) -> Option<&[String]> {
        self.sample_names.as_deref()
    }

    pub fn column_norms(&self) -> Vec<T> {
        self.values.column_iter().map(|c| c.norm()).collect()
    }

    /// Scales every column to unit Euclidean norm. Zero columns are an error.
    pub fn normalize_columns(&self) -> Result<Self> {
        let mut values = self.values.clone();
        for (j, mut col) in values.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == T::zero() {
                return Err(Error::ZeroColumn(j));
            }
            col.unscale_mut(norm);
        }
        Ok(Self {
            values,
            feature_names: self.feature_names.clone(),
            sample_names: self.sample_names.clone(),
        })
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        self.column_norms()
            .into_iter()
            .all(|n| (n - T::one()).abs() <= tol)
    }

    /// Gram matrix `XᵀX`.
    pub fn gram(&self) -> DMatrix<T> {
        self.values.tr_mul(&self.values)
    }
}

/// Cluster assignment of `N` points into `n` clusters.
///
/// Cluster ids are stored zero-based; files use one-based ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labels {
    assignments: Vec<usize>,
    n_clusters: usize,
}

impl Labels {
    pub fn new(assignments: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if n_clusters < 1 {
            return Err(Error::InvalidLabels(
                "cluster count must be at least 1".into(),
            ));
        }
        if let Some((i, &a)) = assignments
            .iter()
            .enumerate()
            .find(|(_, &a)| a >= n_clusters)
        {
            return Err(Error::InvalidLabels(format!(
                "point {i} assigned to cluster {a}, outside 0..{n_clusters}"
            )));
        }
        Ok(Self {
            assignments,
            n_clusters,
        })
    }

    /// Builds labels from one-based ids; the cluster count is the largest id.
    pub fn from_one_based(ids: &[usize]) -> Result<Self> {
        if let Some(i) = ids.iter().position(|&a| a == 0) {
            return Err(Error::InvalidLabels(format!(
                "point {i} has id 0; ids are one-based"
            )));
        }
        let n = ids.iter().copied().max().unwrap_or(1);
        Self::new(ids.iter().map(|&a| a - 1).collect(), n)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignments
    }

    pub fn get(&self, i: usize) -> usize {
        self.assignments[i]
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.assignments.iter().map(|a| a + 1).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Relabels clusters in order of first appearance.
    pub fn canonical(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.n_clusters];
        let mut next = 0;
        self.assignments
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect()
    }

    /// True when both label vectors induce the same partition.
    pub fn same_partition(&self, other: &Labels) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }

    /// Applies a point permutation: `result[k] = self[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            assignments: perm.iter().map(|&k| self.assignments[k]).collect(),
            n_clusters: self.n_clusters,
        }
    }
}
