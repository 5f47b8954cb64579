use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cssc::dataset::{
    generate_union_of_subspaces, load_constraints, load_labels, load_matrix,
    sample_side_information, write_atomic, write_constraints, write_labels, write_matrix,
    ConstraintSet, DataMatrix, Labels, SyntheticSpec,
};
use cssc::metrics::{
    clustering_error, score_to_f64, validate_theorem1, MetricsReport, TheoremHarness,
};
use cssc::modelselect::{export_surface, grid_search, GridSpec};
use cssc::pipelines::{run_method, Method, PipelineOptions};
use cssc::selfexpress::{
    lambda_from_lambda0, SolverOptions, DEFAULT_MAX_ITERS, DEFAULT_RHO, DEFAULT_TOL_ABS,
    DEFAULT_TOL_REL,
};
use cssc::spectral::{EmbeddingOptions, KMeansOptions};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, GridConfig, MetricKind, SolverConfig};

pub const DEFAULT_LAMBDA0: f64 = 5.0;

/// Benchmark used when `simulate` is given no geometry.
pub fn default_synthetic(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        ambient_dim: 50,
        n_subspaces: 4,
        subspace_dim: 4,
        points_per_subspace: 25,
        noise_sigma: 0.05,
        seed,
    }
}

fn defaults(trials: usize) -> Config {
    Config {
        orientation: Some(Default::default()),
        normalize: Some(true),
        seed: Some(0),
        methods: Some(vec![Method::Ssc]),
        alpha: Some(0.1),
        solver: SolverConfig {
            rho: Some(DEFAULT_RHO),
            max_iters: Some(DEFAULT_MAX_ITERS),
            tol_abs: Some(DEFAULT_TOL_ABS),
            tol_rel: Some(DEFAULT_TOL_REL),
            error_norm: Some(Default::default()),
            adaptive_rho: Some(true),
        },
        kmeans: Some(KMeansOptions::default()),
        max_alternations: Some(10),
        cannot_link_factor: Some(1.0),
        trials: Some(trials),
        write_coefficients: Some(false),
        out: Some(PathBuf::from("out")),
        ..Default::default()
    }
}

/// Applies defaults under the file and flag layers and fills the values
/// that depend on other fields.
pub fn resolve(file: Option<Config>, flags: Config, default_trials: usize) -> Result<Config> {
    flags.check_layer("command-line flags")?;
    let mut c = defaults(default_trials);
    if let Some(file) = file {
        c = c.overlay(file);
    }
    c = c.overlay(flags);
    if c.lambda.is_none() && c.lambda0.is_none() {
        c.lambda0 = Some(DEFAULT_LAMBDA0);
    }
    let seed = c.seed.unwrap_or(0);
    c.grid = GridConfig {
        lambda0_values: c
            .grid
            .lambda0_values
            .or_else(|| Some(GridSpec::default_lambda0())),
        alpha_values: c
            .grid
            .alpha_values
            .or_else(|| Some(GridSpec::default_alpha())),
        seeds: c.grid.seeds.or(Some(vec![seed])),
    };
    Ok(c)
}

fn seed(c: &Config) -> u64 {
    c.seed.unwrap_or(0)
}

fn out_dir(c: &Config) -> Result<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_run(dir: &Path, command: &str, c: &Config, results: serde_json::Value) -> Result<()> {
    write_json(
        &dir.join("run.json"),
        &json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": c,
            "results": results,
        }),
    )
}

struct Inputs {
    x: DataMatrix<f64>,
    truth: Option<Labels>,
}

fn load_inputs(c: &Config) -> Result<Inputs> {
    let (x, mut truth) = match (&c.data, &c.synthetic) {
        (Some(path), None) => {
            let x = load_matrix::<f64>(path, c.orientation.unwrap_or_default())
                .with_context(|| format!("loading data {}", path.display()))?;
            (x, None)
        }
        (None, Some(spec)) => {
            let s = generate_union_of_subspaces::<f64>(spec)?;
            (s.data, Some(s.labels))
        }
        (None, None) => bail!("no data: give --data or a synthetic spec in --config"),
        (Some(_), Some(_)) => bail!("give either data or a synthetic spec, not both"),
    };
    let x = if c.normalize.unwrap_or(true) {
        x.normalize_columns().context("normalizing columns")?
    } else {
        x
    };
    if let Some(path) = &c.labels {
        truth =
            Some(load_labels(path).with_context(|| format!("loading labels {}", path.display()))?);
    }
    if let Some(t) = &truth {
        if t.len() != x.n_samples() {
            bail!(
                "labels cover {} samples but the data has {}",
                t.len(),
                x.n_samples()
            );
        }
    }
    Ok(Inputs { x, truth })
}

fn side_information(c: &Config, inputs: &Inputs, seed: u64) -> Result<Option<ConstraintSet>> {
    let n = inputs.x.n_samples();
    match (&c.constraints, c.p) {
        (Some(path), None) => {
            Ok(Some(load_constraints(path, n).with_context(|| {
                format!("loading constraints {}", path.display())
            })?))
        }
        (None, Some(p)) => {
            let truth = inputs.truth.as_ref().ok_or_else(|| {
                anyhow!("sampling side-information with --p needs ground-truth labels")
            })?;
            Ok(Some(sample_side_information(truth, p, seed)?))
        }
        (None, None) => Ok(None),
        (Some(_), Some(_)) => bail!("give either a constraints file or --p, not both"),
    }
}

fn n_clusters(c: &Config, inputs: &Inputs) -> Result<usize> {
    let n =
        c.n.or_else(|| inputs.truth.as_ref().map(|t| t.n_clusters()))
            .ok_or_else(|| anyhow!("cluster count unknown: give --n or ground-truth labels"))?;
    if n < 1 {
        bail!("--n must be at least 1");
    }
    Ok(n)
}

fn lambda(c: &Config, x: &DataMatrix<f64>) -> Result<f64> {
    match (c.lambda, c.lambda0) {
        (Some(l), None) => Ok(l),
        (None, Some(l0)) => Ok(lambda_from_lambda0(x, l0)?),
        _ => bail!("give exactly one of --lambda and --lambda0"),
    }
}

fn pipeline_options(c: &Config, n: usize, lambda: f64) -> PipelineOptions<f64> {
    let s = &c.solver;
    let mut solver = SolverOptions::new(lambda);
    solver.rho = s.rho.unwrap_or(solver.rho);
    solver.max_iters = s.max_iters.unwrap_or(solver.max_iters);
    solver.tol_abs = s.tol_abs.unwrap_or(solver.tol_abs);
    solver.tol_rel = s.tol_rel.unwrap_or(solver.tol_rel);
    solver.error_norm = s.error_norm.unwrap_or(solver.error_norm);
    solver.adaptive_rho = s.adaptive_rho.unwrap_or(solver.adaptive_rho);
    let mut o = PipelineOptions::new(n, lambda);
    o.solver = solver;
    o.kmeans = c.kmeans.unwrap_or_default();
    o.embedding = EmbeddingOptions {
        degree_regularization: c.degree_regularization,
    };
    o.seed = seed(c);
    o.alpha = c.alpha.unwrap_or(o.alpha);
    o.max_alternations = c.max_alternations.unwrap_or(o.max_alternations);
    o.cannot_link_factor = c.cannot_link_factor.unwrap_or(o.cannot_link_factor);
    o
}

fn single_method(c: &Config) -> Result<Method> {
    match c.methods.as_deref() {
        Some([m]) => Ok(*m),
        Some([]) | None => bail!("no method given"),
        Some(_) => bail!("this command takes exactly one --method"),
    }
}

pub fn cluster(c: &Config) -> Result<()> {
    let method = single_method(c)?;
    let inputs = load_inputs(c)?;
    let cs = side_information(c, &inputs, seed(c))?;
    if method.uses_constraints() && cs.is_none() {
        bail!("method {method} uses side-information: give --constraints or --p");
    }
    for m in c.metrics.iter().flatten() {
        match m {
            MetricKind::Err | MetricKind::Ri if inputs.truth.is_none() => {
                bail!("metric {m:?} needs ground-truth labels: give --labels")
            }
            MetricKind::Rie if cs.as_ref().is_none_or(|cs| cs.is_empty()) => {
                bail!("metric rie needs a nonempty constraint set: give --constraints or --p")
            }
            _ => {}
        }
    }
    let n = n_clusters(c, &inputs)?;
    let lambda = lambda(c, &inputs.x)?;
    let opts = pipeline_options(c, n, lambda);
    let result = run_method(method, &inputs.x, cs.as_ref(), &opts)?;
    let report = MetricsReport::evaluate(&result.labels, inputs.truth.as_ref(), cs.as_ref())?;

    let dir = out_dir(c)?;
    write_labels(dir.join("labels.csv"), &result.labels)?;
    write_json(&dir.join("metrics.json"), &report)?;
    if c.write_coefficients.unwrap_or(false) {
        write_matrix(dir.join("coefficients.csv"), result.coefficients.values())?;
    }
    write_run(
        &dir,
        "cluster",
        c,
        json!({
            "method": method,
            "lambda": lambda,
            "n_clusters": n,
            "converged": result.converged,
            "iterations": result.iterations,
            "objective_trace": result.objective_trace,
            "metrics": report,
        }),
    )?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    seed: u64,
    method: Method,
    err: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SummaryRow {
    method: Method,
    mean_err: Option<f64>,
    std_err: Option<f64>,
    trials: usize,
    failures: usize,
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / v.len() as f64;
    (Some(m), Some(var.sqrt()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Table-style trials: trial `t` samples side-information and seeds
/// k-means with `seed + t`, shared by every method.
pub fn trials(c: &Config) -> Result<()> {
    let methods = c.methods.clone().unwrap_or_default();
    if methods.is_empty() {
        bail!("no method given");
    }
    let trials = c.trials.unwrap_or(20);
    if trials < 1 {
        bail!("--trials must be at least 1");
    }
    let p =
        c.p.ok_or_else(|| anyhow!("trials resample side-information each time: give --p"))?;
    if c.constraints.is_some() {
        bail!("trials resample side-information: --constraints cannot be used");
    }
    let inputs = load_inputs(c)?;
    let truth = inputs
        .truth
        .as_ref()
        .ok_or_else(|| anyhow!("trials report ERR and need ground-truth labels"))?;
    let n = n_clusters(c, &inputs)?;
    let lambda = lambda(c, &inputs.x)?;
    let base = pipeline_options(c, n, lambda);
    let base_seed = seed(c);

    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .flat_map_iter(|t| {
            let s = base_seed.wrapping_add(t as u64);
            let cs = sample_side_information(truth, p, s);
            let x = &inputs.x;
            methods
                .iter()
                .map(move |&m| {
                    let run = cs.as_ref().map_err(|e| e.to_string()).and_then(|cs| {
                        let mut o = base;
                        o.seed = s;
                        run_method(m, x, Some(cs), &o)
                            .and_then(|r| clustering_error(&r.labels, truth))
                            .map(score_to_f64)
                            .map_err(|e| e.to_string())
                    });
                    TrialRow {
                        trial: t,
                        seed: s,
                        method: m,
                        err: run.as_ref().ok().copied(),
                        error: run.err(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let summary: Vec<SummaryRow> = methods
        .iter()
        .map(|&m| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == m)
                .filter_map(|r| r.err)
                .collect();
            let (mean_err, std_err) = mean_std(&errs);
            SummaryRow {
                method: m,
                mean_err,
                std_err,
                trials,
                failures: trials - errs.len(),
            }
        })
        .collect();

    let dir = out_dir(c)?;
    let mut table = String::from("method,mean_err,std_err,trials,failures\n");
    for r in &summary {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            fmt_opt(r.mean_err),
            fmt_opt(r.std_err),
            r.trials,
            r.failures
        ));
    }
    write_atomic(dir.join("trials.csv"), table.as_bytes())?;
    let mut detail = String::from("trial,seed,method,err,error\n");
    for r in &rows {
        let msg = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        let msg = if msg.is_empty() {
            msg
        } else {
            format!("\"{msg}\"")
        };
        detail.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial,
            r.seed,
            r.method,
            fmt_opt(r.err),
            msg
        ));
    }
    write_atomic(dir.join("trial_errors.csv"), detail.as_bytes())?;
    write_run(
        &dir,
        "trials",
        c,
        json!({ "lambda": lambda, "n_clusters": n, "summary": summary }),
    )?;
    print!("{table}");
    Ok(())
}

pub fn grid(c: &Config) -> Result<()> {
    let method = single_method(c)?;
    let inputs = load_inputs(c)?;
    let cs = side_information(c, &inputs, seed(c))?.ok_or_else(|| {
        anyhow!("the estimator is undefined without side-information: give --constraints or --p")
    })?;
    let n = n_clusters(c, &inputs)?;
    let spec = GridSpec {
        lambda0_values: c
            .grid
            .lambda0_values
            .clone()
            .unwrap_or_else(GridSpec::default_lambda0),
        alpha_values: c
            .grid
            .alpha_values
            .clone()
            .unwrap_or_else(GridSpec::default_alpha),
        method,
        seeds: c.grid.seeds.clone().unwrap_or_else(|| vec![seed(c)]),
    };
    // λ and α are set per cell
    let base = pipeline_options(c, n, 1.0);
    let sel = grid_search(&inputs.x, &cs, &spec, &base, inputs.truth.as_ref())?;
    let lambda = lambda_from_lambda0(&inputs.x, sel.lambda0)?;
    let selected = json!({
        "method": method,
        "lambda0": sel.lambda0,
        "alpha": sel.alpha,
        "lambda": lambda,
        "mean_rie": sel.mean_rie,
        "mean_err": sel.mean_err,
        "failed_cells": sel.surface.cells.iter().filter(|c| !c.is_ok()).count(),
    });

    let dir = out_dir(c)?;
    export_surface(&sel.surface, dir.join("surface.csv"))?;
    write_json(&dir.join("selected.json"), &selected)?;
    write_run(
        &dir,
        "grid",
        c,
        json!({ "n_clusters": n, "selected": selected }),
    )?;
    println!("{}", serde_json::to_string(&selected)?);
    Ok(())
}

pub fn validate_theorem(c: &Config) -> Result<()> {
    let p =
        c.p.ok_or_else(|| anyhow!("give the sampling proportion --p"))?;
    let harness = TheoremHarness {
        n_points: c.points.unwrap_or(60),
        p,
        trials: c.trials.unwrap_or(1000),
        seed: seed(c),
        n_clusters: c.n.unwrap_or(4),
    };
    let report = validate_theorem1(&harness)?;
    let summary = json!({
        "n_points": harness.n_points,
        "p": p,
        "trials": harness.trials,
        "n_clusters": harness.n_clusters,
        "bound": report.bound,
        "violations": report.violations,
        "violation_rate": report.violation_rate,
        "max_deviation": report.max_deviation,
        "mean_deviation": report.mean_deviation,
    });

    let dir = out_dir(c)?;
    write_atomic(dir.join("theorem_trials.csv"), report.to_csv().as_bytes())?;
    write_json(&dir.join("theorem.json"), &summary)?;
    write_run(&dir, "validate-theorem", c, summary.clone())?;
    println!(
        "bound {:e}  max |mu_hat - mu| {:e}  violation rate {} ({} of {})",
        report.bound,
        report.max_deviation,
        report.violation_rate,
        report.violations,
        harness.trials
    );
    Ok(())
}

pub fn simulate(c: &Config) -> Result<()> {
    let spec = c
        .synthetic
        .clone()
        .unwrap_or_else(|| default_synthetic(seed(c)));
    let s = generate_union_of_subspaces::<f64>(&spec)?;
    let dir = out_dir(c)?;
    write_matrix(dir.join("data.csv"), s.data.values())?;
    write_labels(dir.join("labels.csv"), &s.labels)?;
    let mut n_constraints = None;
    if let Some(p) = c.p {
        let cs = sample_side_information(&s.labels, p, seed(c))?;
        write_constraints(dir.join("constraints.txt"), &cs)?;
        n_constraints = Some(cs.len());
    }
    write_run(
        &dir,
        "simulate",
        c,
        json!({ "n_samples": s.labels.len(), "n_constraints": n_constraints }),
    )?;
    println!("wrote {} samples to {}", s.labels.len(), dir.display());
    Ok(())
}
