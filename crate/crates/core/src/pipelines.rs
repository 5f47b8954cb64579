//! End-to-end clustering: self-expressive coding followed by the spectral
//! stage, in the SSC / CSSC / CS³C families and the LSR baselines. A `+`
//! suffix means the final quantization honors the pairwise constraints.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_weight_matrix_scaled, ConstraintSet, DataMatrix, Labels, WeightMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::selfexpress::{
    combine_structured_weights, objective, solve_lsr, solve_weighted_sparse, CoefficientMatrix,
    LsrVariant, SolverOptions,
};
use crate::spectral::{
    affinity_from_coefficients, constrained_kmeans, kmeans, spectral_embedding, EmbeddingOptions,
    KMeansOptions, SegmentationMatrix,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ssc,
    SscPlus,
    Cssc,
    CsscPlus,
    Cs3c,
    Cs3cPlus,
    Lsr1,
    Lsr2,
    Lsr1Plus,
    Lsr2Plus,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Ssc,
        Method::SscPlus,
        Method::Cssc,
        Method::CsscPlus,
        Method::Cs3c,
        Method::Cs3cPlus,
        Method::Lsr1,
        Method::Lsr2,
        Method::Lsr1Plus,
        Method::Lsr2Plus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ssc => "ssc",
            Method::SscPlus => "ssc_plus",
            Method::Cssc => "cssc",
            Method::CsscPlus => "cssc_plus",
            Method::Cs3c => "cs3c",
            Method::Cs3cPlus => "cs3c_plus",
            Method::Lsr1 => "lsr1",
            Method::Lsr2 => "lsr2",
            Method::Lsr1Plus => "lsr1_plus",
            Method::Lsr2Plus => "lsr2_plus",
        }
    }

    /// Constrained quantization in the spectral stage.
    pub fn is_plus(self) -> bool {
        matches!(
            self,
            Method::SscPlus
                | Method::CsscPlus
                | Method::Cs3cPlus
                | Method::Lsr1Plus
                | Method::Lsr2Plus
        )
    }

    /// Whether side-information enters the method at any stage.
    pub fn uses_constraints(self) -> bool {
        self.is_plus() || matches!(self, Method::Cssc | Method::Cs3c)
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Method::Cs3c | Method::Cs3cPlus)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        let key = if s.trim().ends_with('+') {
            format!("{}plus", key)
        } else {
            key
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PipelineOptions<T: Real> {
    pub n_clusters: usize,
    pub solver: SolverOptions<T>,
    pub kmeans: KMeansOptions,
    pub embedding: EmbeddingOptions<T>,
    pub seed: u64,
    /// Structured-norm coupling for the CS³C family.
    pub alpha: T,
    /// Outer alternations for the CS³C family.
    pub max_alternations: usize,
    /// Multiplies cannot-link weights; 1 keeps the plain exponential weights.
    pub cannot_link_factor: T,
}

impl<T: Real> PipelineOptions<T> {
    pub const DEFAULT_MAX_ALTERNATIONS: usize = 10;

    pub fn new(n_clusters: usize, lambda: T) -> Self {
        Self {
            n_clusters,
            solver: SolverOptions::new(lambda),
            kmeans: KMeansOptions::default(),
            embedding: EmbeddingOptions::default(),
            seed: 0,
            alpha: T::lit(0.1),
            max_alternations: Self::DEFAULT_MAX_ALTERNATIONS,
            cannot_link_factor: T::one(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_clusters < 1 {
            return Err(Error::InvalidParameter(
                "cluster count must be at least 1".into(),
            ));
        }
        if !(self.alpha >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be nonnegative",
                self.alpha
            )));
        }
        if self.max_alternations < 1 {
            return Err(Error::InvalidParameter(
                "max_alternations must be at least 1".into(),
            ));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Debug)]
pub struct ClusteringResult<T: Real> {
    pub labels: Labels,
    pub coefficients: CoefficientMatrix<T>,
    pub converged: bool,
    /// Outer alternations for the CS³C family, otherwise 1.
    pub iterations: usize,
    pub objective_trace: Vec<T>,
}

fn check_constraints<T: Real>(x: &DataMatrix<T>, cs: &ConstraintSet) -> Result<()> {
    if cs.n_points() != x.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "constraints cover {} points, data has {}",
            cs.n_points(),
            x.n_samples()
        )));
    }
    Ok(())
}

/// Affinity, embedding and (constrained) k-means on a coefficient matrix.
pub fn segment<T: Real>(
    c: &CoefficientMatrix<T>,
    cs: Option<&ConstraintSet>,
    opts: &PipelineOptions<T>,
) -> Result<Labels> {
    let a = affinity_from_coefficients(c);
    let e = spectral_embedding(&a, opts.n_clusters, &opts.embedding)?;
    match cs {
        Some(cs) => constrained_kmeans(&e, opts.n_clusters, cs, opts.seed, &opts.kmeans),
        None => kmeans(&e, opts.n_clusters, opts.seed, &opts.kmeans),
    }
}

fn weighted_pipeline<T: Real>(
    x: &DataMatrix<T>,
    w: &DMatrix<T>,
    quantize_with: Option<&ConstraintSet>,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    opts.validate()?;
    let sol = solve_weighted_sparse(x, w, &opts.solver)?;
    let labels = segment(&sol.coefficients, quantize_with, opts)?;
    Ok(ClusteringResult {
        labels,
        coefficients: sol.coefficients,
        converged: sol.converged,
        iterations: 1,
        objective_trace: vec![sol.objective],
    })
}

fn psi<T: Real>(cs: &ConstraintSet, opts: &PipelineOptions<T>) -> WeightMatrix<T> {
    build_weight_matrix_scaled(cs, opts.cannot_link_factor)
}

pub fn run_ssc<T: Real>(
    x: &DataMatrix<T>,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    let w = WeightMatrix::<T>::ones(x.n_samples());
    weighted_pipeline(x, w.values(), None, opts)
}

/// Unweighted coding, constrained quantization.
pub fn run_ssc_plus<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    check_constraints(x, cs)?;
    let w = WeightMatrix::<T>::ones(x.n_samples());
    weighted_pipeline(x, w.values(), Some(cs), opts)
}

pub fn run_cssc<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    check_constraints(x, cs)?;
    weighted_pipeline(x, psi(cs, opts).values(), None, opts)
}

pub fn run_cssc_plus<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    check_constraints(x, cs)?;
    weighted_pipeline(x, psi(cs, opts).values(), Some(cs), opts)
}

pub fn run_cs3c<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    alternate(x, cs, false, opts)
}

pub fn run_cs3c_plus<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    alternate(x, cs, true, opts)
}

/// Starts from the CSSC segmentation, then alternates a weighted solve with
/// `W = Ψ + α·θ(Q)` and a spectral step, until the segmentation repeats or
/// `max_alternations` is reached.
fn alternate<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    plus: bool,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    check_constraints(x, cs)?;
    opts.validate()?;
    let psi = psi(cs, opts);
    let quantize_with = plus.then_some(cs);

    let init = weighted_pipeline(x, psi.values(), quantize_with, opts)?;
    let mut q = init.labels;
    let mut trace = Vec::with_capacity(opts.max_alternations);
    let mut coefficients = init.coefficients;
    let mut solve_converged = init.converged;
    let mut fixed_point = false;
    let mut iterations = 0;

    for t in 1..=opts.max_alternations {
        iterations = t;
        let seg = SegmentationMatrix::from_labels(q.clone());
        let w = combine_structured_weights(&psi, &seg, opts.alpha)?;
        let sol = solve_weighted_sparse(x, &w, &opts.solver)?;
        let next = segment(&sol.coefficients, quantize_with, opts)?;

        let next_seg = SegmentationMatrix::from_labels(next.clone());
        let w_next = combine_structured_weights(&psi, &next_seg, opts.alpha)?;
        trace.push(objective(
            x,
            sol.coefficients.values(),
            &w_next,
            opts.solver.lambda,
            opts.solver.error_norm,
        ));

        coefficients = sol.coefficients;
        solve_converged = sol.converged;
        let repeated = next.same_partition(&q);
        q = next;
        if repeated {
            fixed_point = true;
            break;
        }
    }

    Ok(ClusteringResult {
        labels: q,
        coefficients,
        converged: solve_converged && fixed_point,
        iterations,
        objective_trace: trace,
    })
}

/// LSR coding with `λ = opts.solver.lambda`; constrained quantization when
/// `cs` is given.
pub fn run_lsr<T: Real>(
    x: &DataMatrix<T>,
    variant: LsrVariant,
    cs: Option<&ConstraintSet>,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    if let Some(cs) = cs {
        check_constraints(x, cs)?;
    }
    opts.validate()?;
    let c = solve_lsr(x, opts.solver.lambda, variant)?;
    let labels = segment(&c, cs, opts)?;
    let residual = x.values() - x.values() * c.values();
    let obj = opts.solver.lambda * c.values().norm_squared() + residual.norm_squared();
    Ok(ClusteringResult {
        labels,
        coefficients: c,
        converged: true,
        iterations: 1,
        objective_trace: vec![obj],
    })
}

/// Dispatches on `method`. Methods that ignore side-information accept
/// `None`; the others treat `None` as an empty constraint set.
pub fn run_method<T: Real>(
    method: Method,
    x: &DataMatrix<T>,
    cs: Option<&ConstraintSet>,
    opts: &PipelineOptions<T>,
) -> Result<ClusteringResult<T>> {
    let empty;
    let cs = match cs {
        Some(cs) => cs,
        None => {
            empty = ConstraintSet::empty(x.n_samples());
            &empty
        }
    };
    match method {
        Method::Ssc => run_ssc(x, opts),
        Method::SscPlus => run_ssc_plus(x, cs, opts),
        Method::Cssc => run_cssc(x, cs, opts),
        Method::CsscPlus => run_cssc_plus(x, cs, opts),
        Method::Cs3c => run_cs3c(x, cs, opts),
        Method::Cs3cPlus => run_cs3c_plus(x, cs, opts),
        Method::Lsr1 => run_lsr(x, LsrVariant::Lsr1, None, opts),
        Method::Lsr2 => run_lsr(x, LsrVariant::Lsr2, None, opts),
        Method::Lsr1Plus => run_lsr(x, LsrVariant::Lsr1, Some(cs), opts),
        Method::Lsr2Plus => run_lsr(x, LsrVariant::Lsr2, Some(cs), opts),
    }
}
