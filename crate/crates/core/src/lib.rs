//! Constrained sparse subspace clustering with pairwise side-information.
//!
//! Samples are columns of a `D×N` matrix `X`. Each sample is coded as a
//! sparse combination of the others (`X ≈ XC`, `diag(C) = 0`) with
//! coefficient penalties reweighted by must-link / cannot-link pairs; the
//! symmetrized coefficient magnitudes form an affinity that is segmented
//! by spectral clustering, optionally with a constrained k-means that
//! honors every pair. The CS³C variants alternate the coding and the
//! segmentation through a structured norm that penalizes coefficients
//! crossing the current segments.
//!
//! Clustering quality can be estimated without ground truth from the
//! constraints alone ([`metrics::rand_index_estimator`]), which drives
//! parameter selection in [`modelselect`].
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`dataset`] | matrices, labels, constraints, weights, synthetic data |
//! | [`selfexpress`] | weighted ℓ1 coding by ADMM, LSR, `λ₀ → λ` |
//! | [`spectral`] | affinity, embedding, (constrained) k-means |
//! | [`pipelines`] | SSC, CSSC, CS³C and LSR families |
//! | [`metrics`] | ERR, Rand index, estimator, deviation bound |
//! | [`modelselect`] | grid search over `(λ₀, α)` |
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

// `!(x > 0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod modelselect;
pub mod pipelines;
mod scalar;
pub mod seed;
pub mod selfexpress;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DataMatrixF64 = dataset::DataMatrix<f64>;
pub type DataMatrixF32 = dataset::DataMatrix<f32>;
pub type WeightMatrixF64 = dataset::WeightMatrix<f64>;
pub type CoefficientMatrixF64 = selfexpress::CoefficientMatrix<f64>;
pub type CoefficientMatrixF32 = selfexpress::CoefficientMatrix<f32>;
pub type SolverOptionsF64 = selfexpress::SolverOptions<f64>;
pub type AffinityMatrixF64 = spectral::AffinityMatrix<f64>;
pub type EmbeddingF64 = spectral::Embedding<f64>;
pub type PipelineOptionsF64 = pipelines::PipelineOptions<f64>;
pub type PipelineOptionsF32 = pipelines::PipelineOptions<f32>;
pub type ClusteringResultF64 = pipelines::ClusteringResult<f64>;
