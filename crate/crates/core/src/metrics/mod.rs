//! Clustering error under optimal label matching, the Rand index, the
//! Rand index estimator computed from pairwise constraints, and the
//! deviation bound between the two.
//!
//! Pair-counting scores are returned as exact ratios so that identities
//! such as "estimator over every pair equals the Rand index" hold with no
//! tolerance.

mod hungarian;
mod theorem;

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dataset::{ConstraintSet, Labels};
use crate::error::{Error, Result};

pub use hungarian::min_cost_assignment;
pub use theorem::{theorem1_bound, validate_theorem1, TheoremHarness, TheoremReport, TheoremTrial};

/// Exact score in `[0, 1]`.
pub type Score = Ratio<u64>;

pub fn score_to_f64(s: Score) -> f64 {
    *s.numer() as f64 / *s.denom() as f64
}

/// `Θᵢⱼ = 0` when `i` and `j` share a cluster, 1 otherwise; zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureMatrix {
    values: DMatrix<u8>,
}

impl StructureMatrix {
    pub fn values(&self) -> &DMatrix<u8> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[(i, j)]
    }
}

pub fn structure_matrix(labels: &Labels) -> StructureMatrix {
    let n = labels.len();
    StructureMatrix {
        values: DMatrix::from_fn(n, n, |i, j| {
            u8::from(i != j && labels.get(i) != labels.get(j))
        }),
    }
}

fn check_lengths(a: &Labels, b: &Labels) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Fraction of points misassigned under the best one-to-one matching of
/// predicted to true clusters. Unequal cluster counts are padded.
pub fn clustering_error(pred: &Labels, truth: &Labels) -> Result<Score> {
    check_lengths(pred, truth)?;
    let n = pred.len();
    if n == 0 {
        return Err(Error::InvalidLabels("empty labeling".into()));
    }
    let k = pred.n_clusters().max(truth.n_clusters());
    let mut confusion = vec![vec![0i64; k]; k];
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        confusion[p][t] += 1;
    }
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    let (neg_matched, _) = min_cost_assignment(&cost);
    let matched = (-neg_matched) as u64;
    Ok(Ratio::new(n as u64 - matched, n as u64))
}

/// `μ = 1 − ‖Θ − Θ*‖₁ / (N² − N)` over ordered off-diagonal entries.
pub fn rand_index(pred: &Labels, truth: &Labels) -> Result<Score> {
    check_lengths(pred, truth)?;
    let n = pred.len();
    if n < 2 {
        return Err(Error::InvalidLabels(
            "rand index needs at least two points".into(),
        ));
    }
    let (p, t) = (pred.as_slice(), truth.as_slice());
    let mut disagree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (p[i] == p[j]) != (t[i] == t[j]) {
                disagree += 2;
            }
        }
    }
    let total = (n * (n - 1)) as u64;
    Ok(Ratio::new(total - disagree, total))
}

/// `μ̂ = 1 − (1/|Ω|) Σ_{(i,j)∈Ω} |Θᵢⱼ − Φ*ᵢⱼ|`, with `Ω` the mirrored
/// ordered entries of the constraint pairs.
pub fn rand_index_estimator(pred: &Labels, cs: &ConstraintSet) -> Result<Score> {
    if cs.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    if cs.n_points() != pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "constraints cover {} points, labels {}",
            cs.n_points(),
            pred.len()
        )));
    }
    let omega = cs.omega_size() as u64;
    let mismatched = 2 * cs.violations(pred) as u64;
    Ok(Ratio::new(omega - mismatched, omega))
}

/// Summary written next to clustering outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rand_index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rie: Option<f64>,
    /// Deviation bound at the observed proportion `|Ω| / (N(N−1))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub n_constraints: usize,
}

impl MetricsReport {
    pub fn evaluate(
        pred: &Labels,
        truth: Option<&Labels>,
        cs: Option<&ConstraintSet>,
    ) -> Result<Self> {
        let mut report = MetricsReport::default();
        if let Some(t) = truth {
            report.err = Some(score_to_f64(clustering_error(pred, t)?));
            report.rand_index = Some(score_to_f64(rand_index(pred, t)?));
        }
        if let Some(cs) = cs.filter(|c| !c.is_empty()) {
            report.n_constraints = cs.len();
            report.rie = Some(score_to_f64(rand_index_estimator(pred, cs)?));
            let n = pred.len();
            let p = cs.omega_size() as f64 / (n * (n - 1)) as f64;
            report.bound = theorem1_bound(p, n).ok();
        }
        Ok(report)
    }
}
