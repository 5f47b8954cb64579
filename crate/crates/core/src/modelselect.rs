//! Parameter selection by the Rand index estimator: sweep a `(λ₀, α)`
//! grid, average the estimator over seeds, keep the peak.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_atomic, ConstraintSet, DataMatrix, Labels};
use crate::error::{Error, Result};
use crate::metrics::{clustering_error, rand_index_estimator, score_to_f64};
use crate::pipelines::{run_method, Method, PipelineOptions};
use crate::scalar::Real;
use crate::selfexpress::lambda_from_lambda0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambda0_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub method: Method,
    pub seeds: Vec<u64>,
}

impl GridSpec {
    pub fn default_lambda0() -> Vec<f64> {
        (2..=10).map(f64::from).collect()
    }

    pub fn default_alpha() -> Vec<f64> {
        vec![
            0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, 1.5, 2.0,
        ]
    }

    pub fn with_defaults(method: Method, seeds: Vec<u64>) -> Self {
        Self {
            lambda0_values: Self::default_lambda0(),
            alpha_values: Self::default_alpha(),
            method,
            seeds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda0_values.is_empty() || self.alpha_values.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one lambda0, one alpha and one seed".into(),
            ));
        }
        if self.lambda0_values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter(
                "lambda0 values must be positive".into(),
            ));
        }
        if self.alpha_values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "alpha values must be nonnegative".into(),
            ));
        }
        if !matches!(
            self.method,
            Method::Cssc | Method::CsscPlus | Method::Cs3c | Method::Cs3cPlus
        ) {
            return Err(Error::InvalidParameter(format!(
                "grid search supports cssc, cssc_plus, cs3c and cs3c_plus, not {}",
                self.method
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub rie: Option<f64>,
    pub err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda0: f64,
    pub alpha: f64,
    pub mean_rie: Option<f64>,
    pub mean_err: Option<f64>,
    pub std_err: Option<f64>,
    pub outcomes: Vec<SeedOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GridCell {
    fn from_outcomes(lambda0: f64, alpha: f64, outcomes: Vec<SeedOutcome>) -> Self {
        let error = outcomes.iter().find_map(|o| o.error.clone()).or_else(|| {
            outcomes
                .iter()
                .any(|o| o.rie.is_none())
                .then(|| "missing estimator value".to_string())
        });
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mean_rie, mean_err, std_err) = if error.is_some() || outcomes.is_empty() {
            (None, None, None)
        } else {
            let rie: Vec<f64> = outcomes.iter().filter_map(|o| o.rie).collect();
            let errs: Vec<f64> = outcomes.iter().filter_map(|o| o.err).collect();
            let (m, s) = if errs.len() == outcomes.len() {
                let m = mean(&errs);
                let var = errs.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / errs.len() as f64;
                (Some(m), Some(var.sqrt()))
            } else {
                (None, None)
            };
            (Some(mean(&rie)), m, s)
        };
        Self {
            lambda0,
            alpha,
            mean_rie,
            mean_err,
            std_err,
            outcomes,
            error,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.mean_rie.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSurface {
    pub method: Method,
    pub cells: Vec<GridCell>,
}

impl GridSurface {
    pub fn cell(&self, lambda0: f64, alpha: f64) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.lambda0 == lambda0 && c.alpha == alpha)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSelection {
    pub lambda0: f64,
    pub alpha: f64,
    pub mean_rie: f64,
    pub mean_err: Option<f64>,
    pub surface: GridSurface,
}

/// Peak of the mean estimator; ties go to smaller α, then smaller λ₀.
fn select(cells: &[GridCell]) -> Option<&GridCell> {
    cells
        .iter()
        .filter(|c| c.is_ok())
        .fold(None, |best: Option<&GridCell>, c| {
            let better = match best {
                None => true,
                Some(b) => {
                    let (rc, rb) = (c.mean_rie.unwrap(), b.mean_rie.unwrap());
                    rc > rb
                        || (rc == rb
                            && (c.alpha < b.alpha || (c.alpha == b.alpha && c.lambda0 < b.lambda0)))
                }
            };
            if better {
                Some(c)
            } else {
                best
            }
        })
}

/// Runs `spec.method` at every grid point and seed. `base` supplies every
/// pipeline option except `λ` (from `λ₀`), `α` and the seed. Failures are
/// recorded per cell and excluded from the selection.
pub fn grid_search<T: Real>(
    x: &DataMatrix<T>,
    cs: &ConstraintSet,
    spec: &GridSpec,
    base: &PipelineOptions<T>,
    truth: Option<&Labels>,
) -> Result<GridSelection> {
    spec.validate()?;
    if cs.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    let points: Vec<(f64, f64)> = spec
        .lambda0_values
        .iter()
        .flat_map(|&l| spec.alpha_values.iter().map(move |&a| (l, a)))
        .collect();

    let cells: Vec<GridCell> = points
        .par_iter()
        .map(|&(lambda0, alpha)| {
            let lambda = match lambda_from_lambda0(x, T::lit(lambda0)) {
                Ok(l) => l,
                Err(e) => {
                    let failed = spec
                        .seeds
                        .iter()
                        .map(|&seed| SeedOutcome {
                            seed,
                            rie: None,
                            err: None,
                            error: Some(e.to_string()),
                        })
                        .collect();
                    return GridCell::from_outcomes(lambda0, alpha, failed);
                }
            };
            let outcomes = spec
                .seeds
                .iter()
                .map(|&seed| {
                    let mut opts = *base;
                    opts.solver.lambda = lambda;
                    opts.alpha = T::lit(alpha);
                    opts.seed = seed;
                    let run = run_method(spec.method, x, Some(cs), &opts).and_then(|r| {
                        let rie = score_to_f64(rand_index_estimator(&r.labels, cs)?);
                        let err = truth
                            .map(|t| clustering_error(&r.labels, t).map(score_to_f64))
                            .transpose()?;
                        Ok((rie, err))
                    });
                    match run {
                        Ok((rie, err)) => SeedOutcome {
                            seed,
                            rie: Some(rie),
                            err,
                            error: None,
                        },
                        Err(e) => SeedOutcome {
                            seed,
                            rie: None,
                            err: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect();
            GridCell::from_outcomes(lambda0, alpha, outcomes)
        })
        .collect();

    let surface = GridSurface {
        method: spec.method,
        cells,
    };
    let best = select(&surface.cells).ok_or_else(|| {
        Error::NoViableCell(
            surface
                .cells
                .iter()
                .find_map(|c| c.error.clone())
                .unwrap_or_default(),
        )
    })?;
    Ok(GridSelection {
        lambda0: best.lambda0,
        alpha: best.alpha,
        mean_rie: best.mean_rie.unwrap(),
        mean_err: best.mean_err,
        surface: surface.clone(),
    })
}

const SURFACE_HEADER: &str = "method,lambda0,alpha,seed,rie,err";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format CSV: one row per (λ₀, α, seed).
pub fn surface_to_csv(surface: &GridSurface) -> String {
    let mut out = String::from(SURFACE_HEADER);
    out.push('\n');
    for cell in &surface.cells {
        for o in &cell.outcomes {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                surface.method,
                cell.lambda0,
                cell.alpha,
                o.seed,
                opt(o.rie),
                opt(o.err)
            ));
        }
    }
    out
}

pub fn export_surface(surface: &GridSurface, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, surface_to_csv(surface).as_bytes())
}

/// Parses [`export_surface`] output back into cells. Failure messages are
/// not stored in the file; failed outcomes come back with an empty value.
pub fn read_surface(path: impl AsRef<Path>) -> Result<GridSurface> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let bad = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut method = None;
    let mut cells: Vec<GridCell> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != 6 {
            return Err(bad(line, format!("expected 6 fields, found {}", rec.len())));
        }
        let m: Method = rec[0].parse()?;
        method.get_or_insert(m);
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| bad(line, format!("bad number {s:?}")))
        };
        let optnum = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let (lambda0, alpha) = (num(&rec[1])?, num(&rec[2])?);
        let seed: u64 = rec[3]
            .parse()
            .map_err(|_| bad(line, format!("bad seed {:?}", &rec[3])))?;
        let outcome = SeedOutcome {
            seed,
            rie: optnum(&rec[4])?,
            err: optnum(&rec[5])?,
            error: None,
        };
        match cells
            .iter_mut()
            .find(|c| c.lambda0 == lambda0 && c.alpha == alpha)
        {
            Some(c) => c.outcomes.push(outcome),
            None => cells.push(GridCell {
                lambda0,
                alpha,
                mean_rie: None,
                mean_err: None,
                std_err: None,
                outcomes: vec![outcome],
                error: None,
            }),
        }
    }
    let cells = cells
        .into_iter()
        .map(|c| GridCell::from_outcomes(c.lambda0, c.alpha, c.outcomes))
        .collect();
    Ok(GridSurface {
        method: method.unwrap_or(Method::Cssc),
        cells,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or the lengths differ.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}
