use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {cell:?} as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        col: usize,
        cell: String,
    },

    #[error("{path}: row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid data matrix: {0}")]
    InvalidData(String),

    #[error("column {0} has zero norm and cannot be normalized")]
    ZeroColumn(usize),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),

    #[error(
        "inconsistent constraints: cannot-link ({0}, {1}) joins points already connected by must-links"
    )]
    InconsistentConstraints(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "lambda0 scaling is undefined: min_j max_(i != j) x_i'x_j = {0} is not positive; supply lambda directly"
    )]
    DegenerateScaling(f64),

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("vertex {0} has zero degree; enable degree regularization or inspect the affinity")]
    IsolatedVertex(usize),

    #[error(
        "constrained k-means found no feasible assignment in {attempts} attempts; increase restarts or check that the constraints are satisfiable with {clusters} clusters"
    )]
    Infeasible { attempts: usize, clusters: usize },

    #[error("rand index estimator is undefined for an empty constraint set")]
    EmptyConstraints,

    #[error("every grid cell failed; first failure: {0}")]
    NoViableCell(String),

    #[error("bound is undefined: p*N*(N-1) = {0} must exceed 1")]
    BoundDomain(f64),
}
