//! Deviation bound between the Rand index and its constraint-based
//! estimator, with a Monte-Carlo harness that checks it empirically.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rand_index, rand_index_estimator, score_to_f64};
use crate::dataset::{sample_side_information_bernoulli, Labels};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, stream};

/// `2 / (p·N(N−1) − 1)`; defined when `p·N(N−1) > 1`.
pub fn theorem1_bound(p: f64, n_points: usize) -> Result<f64> {
    let expected = p * (n_points as f64) * (n_points.saturating_sub(1) as f64);
    if !(expected > 1.0) || !(0.0..=1.0).contains(&p) {
        return Err(Error::BoundDomain(expected));
    }
    Ok(2.0 / (expected - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremHarness {
    pub n_points: usize,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    /// Random labelings draw cluster ids uniformly from this many clusters.
    pub n_clusters: usize,
}

impl TheoremHarness {
    pub fn new(n_points: usize, p: f64, trials: usize, seed: u64) -> Self {
        Self {
            n_points,
            p,
            trials,
            seed,
            n_clusters: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremTrial {
    pub trial: usize,
    pub mu: f64,
    /// `None` when the sampled `Ω` came out empty.
    pub mu_hat: Option<f64>,
    pub deviation: Option<f64>,
    pub bound: f64,
}

impl TheoremTrial {
    /// Empty `Ω` counts as a violation: the estimator is undefined.
    pub fn violates(&self) -> bool {
        self.deviation.is_none_or(|d| d >= self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub bound: f64,
    pub violations: usize,
    pub violation_rate: f64,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub trials: Vec<TheoremTrial>,
}

impl TheoremReport {
    /// `trial,mu,mu_hat,deviation,bound` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,mu,mu_hat,deviation,bound\n");
        for t in &self.trials {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:e},{},{},{:e}\n",
                t.trial,
                t.mu,
                opt(t.mu_hat),
                opt(t.deviation),
                t.bound
            ));
        }
        out
    }
}

fn random_labels(n: usize, k: usize, rng: &mut impl Rng) -> Labels {
    Labels::new((0..n).map(|_| rng.random_range(0..k)).collect(), k)
        .expect("ids drawn below the cluster count")
}

/// Draws random ground-truth and predicted labelings, keeps each unordered
/// pair of the ground truth with probability `p` as a constraint, and
/// compares `|μ̂ − μ|` against the bound.
pub fn validate_theorem1(h: &TheoremHarness) -> Result<TheoremReport> {
    let bound = theorem1_bound(h.p, h.n_points)?;
    if h.n_clusters == 0 {
        return Err(Error::InvalidParameter(
            "cluster count must be positive".into(),
        ));
    }
    let base = derive_seed(h.seed, stream::THEOREM);
    let trials: Vec<TheoremTrial> = (0..h.trials)
        .into_par_iter()
        .map(|t| -> Result<TheoremTrial> {
            let seed = derive_seed(base, t as u64);
            let mut rng = rng_from_seed(seed);
            let truth = random_labels(h.n_points, h.n_clusters, &mut rng);
            let pred = random_labels(h.n_points, h.n_clusters, &mut rng);
            let omega = sample_side_information_bernoulli(&truth, h.p, derive_seed(seed, 1))?;
            let mu = score_to_f64(rand_index(&pred, &truth)?);
            let mu_hat = if omega.is_empty() {
                None
            } else {
                Some(score_to_f64(rand_index_estimator(&pred, &omega)?))
            };
            Ok(TheoremTrial {
                trial: t,
                mu,
                mu_hat,
                deviation: mu_hat.map(|m| (m - mu).abs()),
                bound,
            })
        })
        .collect::<Result<_>>()?;

    let violations = trials.iter().filter(|t| t.violates()).count();
    let devs: Vec<f64> = trials.iter().filter_map(|t| t.deviation).collect();
    let max_deviation = devs.iter().copied().fold(0.0, f64::max);
    let mean_deviation = if devs.is_empty() {
        0.0
    } else {
        devs.iter().sum::<f64>() / devs.len() as f64
    };
    Ok(TheoremReport {
        bound,
        violations,
        violation_rate: if h.trials == 0 {
            0.0
        } else {
            violations as f64 / h.trials as f64
        },
        max_deviation,
        mean_deviation,
        trials,
    })
}
