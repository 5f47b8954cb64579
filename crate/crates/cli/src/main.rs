//! `cssc`: run constrained subspace clustering experiments from the shell.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cssc::dataset::{Orientation, SyntheticSpec};
use cssc::pipelines::Method;
use cssc::selfexpress::ErrorNorm;
use cssc::spectral::KMeansOptions;

use crate::config::{Config, GridConfig, MetricKind, SolverConfig};

#[derive(Parser)]
#[command(
    name = "cssc",
    version,
    about = "Constrained sparse subspace clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster one dataset with one method.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Metrics that must be computable; the run fails otherwise.
        #[arg(long = "metric", value_enum)]
        metrics: Vec<MetricKind>,
        /// Also write the self-expressive coefficients.
        #[arg(long)]
        write_coefficients: bool,
    },
    /// Repeat runs over freshly sampled side-information and report mean ERR.
    Trials {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Select (λ₀, α) by maximizing the Rand index estimator.
    Grid {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        lambda0_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        /// k-means seeds averaged in every cell.
        #[arg(long, value_delimiter = ',')]
        grid_seeds: Option<Vec<u64>>,
    },
    /// Monte Carlo check of the RIE concentration bound on random labelings.
    ValidateTheorem {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Clusters in the random labelings.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic union-of-subspaces dataset.
    Simulate {
        #[arg(long, default_value_t = 50)]
        ambient_dim: usize,
        #[arg(long, default_value_t = 4)]
        subspaces: usize,
        #[arg(long, default_value_t = 4)]
        subspace_dim: usize,
        #[arg(long, default_value_t = 25)]
        points_per_subspace: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also sample side-information with this proportion.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config, or a `run.json` from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data matrix as CSV or whitespace-separated text.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = parse_orientation)]
    orientation: Option<Orientation>,
    /// Keep the columns as given instead of scaling them to unit norm.
    #[arg(long)]
    no_normalize: bool,
    /// Ground-truth labels, one id per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Constraint file with lines `i j ml|cl`.
    #[arg(long, conflicts_with = "p")]
    constraints: Option<PathBuf>,
    /// Sample this proportion of pairs from the ground truth.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Repeat to compare methods in `trials`.
    #[arg(long = "method")]
    methods: Vec<Method>,
    /// Number of clusters; taken from the labels when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "lambda0")]
    lambda: Option<f64>,
    /// λ as a multiple of the smallest λ with a nonzero solution.
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol_abs: Option<f64>,
    #[arg(long)]
    tol_rel: Option<f64>,
    #[arg(long, value_parser = parse_error_norm)]
    error_norm: Option<ErrorNorm>,
    /// Keep ρ fixed instead of balancing the residuals.
    #[arg(long)]
    fixed_rho: bool,
    #[arg(long)]
    restarts: Option<usize>,
    /// Add this ε to every degree before the embedding.
    #[arg(long)]
    regularize_degrees: Option<f64>,
    #[arg(long)]
    max_alternations: Option<usize>,
    #[arg(long)]
    cannot_link_factor: Option<f64>,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| "expected rows-are-features or rows-are-samples".into())
}

fn parse_error_norm(s: &str) -> Result<ErrorNorm, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| "expected frobenius or l1".into())
}

impl CommonArgs {
    fn layer(self) -> anyhow::Result<(Option<Config>, Config)> {
        let file = self.config.as_deref().map(Config::load).transpose()?;
        let flags = Config {
            data: self.data,
            orientation: self.orientation,
            normalize: self.no_normalize.then_some(false),
            labels: self.labels,
            constraints: self.constraints,
            p: self.p,
            seed: self.seed,
            out: self.out,
            ..Default::default()
        };
        Ok((file, flags))
    }
}

impl ModelArgs {
    fn apply(self, c: Config, file: Option<&Config>) -> Config {
        let kmeans = self.restarts.map(|restarts| KMeansOptions {
            restarts,
            ..file.and_then(|f| f.kmeans).unwrap_or_default()
        });
        Config {
            methods: (!self.methods.is_empty()).then_some(self.methods),
            n: self.n,
            lambda: self.lambda,
            lambda0: self.lambda0,
            alpha: self.alpha,
            solver: SolverConfig {
                rho: self.rho,
                max_iters: self.max_iters,
                tol_abs: self.tol_abs,
                tol_rel: self.tol_rel,
                error_norm: self.error_norm,
                adaptive_rho: self.fixed_rho.then_some(false),
            },
            kmeans,
            max_alternations: self.max_alternations,
            cannot_link_factor: self.cannot_link_factor,
            degree_regularization: self.regularize_degrees,
            ..c
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Cluster {
            common,
            model,
            metrics,
            write_coefficients,
        } => {
            let (file, flags) = common.layer()?;
            let mut flags = model.apply(flags, file.as_ref());
            flags.metrics = (!metrics.is_empty()).then_some(metrics);
            flags.write_coefficients = write_coefficients.then_some(true);
            commands::cluster(&commands::resolve(file, flags, 20)?)
        }
        Command::Trials {
            common,
            model,
            trials,
        } => {
            let (file, flags) = common.layer()?;
            let mut flags = model.apply(flags, file.as_ref());
            flags.trials = trials;
            commands::trials(&commands::resolve(file, flags, 20)?)
        }
        Command::Grid {
            common,
            model,
            lambda0_grid,
            alpha_grid,
            grid_seeds,
        } => {
            let (file, flags) = common.layer()?;
            let mut flags = model.apply(flags, file.as_ref());
            flags.grid = GridConfig {
                lambda0_values: lambda0_grid,
                alpha_values: alpha_grid,
                seeds: grid_seeds,
            };
            commands::grid(&commands::resolve(file, flags, 20)?)
        }
        Command::ValidateTheorem {
            points,
            p,
            trials,
            seed,
            n,
            config,
            out,
        } => {
            let file = config.as_deref().map(Config::load).transpose()?;
            let flags = Config {
                points,
                p,
                trials,
                seed,
                n,
                out,
                ..Default::default()
            };
            commands::validate_theorem(&commands::resolve(file, flags, 1000)?)
        }
        Command::Simulate {
            ambient_dim,
            subspaces,
            subspace_dim,
            points_per_subspace,
            noise,
            seed,
            p,
            out,
        } => {
            let flags = Config {
                synthetic: Some(SyntheticSpec {
                    ambient_dim,
                    n_subspaces: subspaces,
                    subspace_dim,
                    points_per_subspace,
                    noise_sigma: noise,
                    seed,
                }),
                p,
                seed: Some(seed),
                out,
                ..Default::default()
            };
            commands::simulate(&commands::resolve(None, flags, 20)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
