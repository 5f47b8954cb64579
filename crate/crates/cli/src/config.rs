//! Layered experiment configuration: defaults < `--config` file < flags.
//!
//! Every field is optional so that layers can be merged field by field.
//! Commands write the fully resolved layer back out as `run.json`, which
//! can be passed to `--config` to repeat the run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cssc::dataset::{Orientation, SyntheticSpec};
use cssc::pipelines::Method;
use cssc::selfexpress::ErrorNorm;
use cssc::spectral::KMeansOptions;
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_norm: Option<ErrorNorm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive_rho: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(
        alias = "method",
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub methods: Option<Vec<Method>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "is_default")]
    pub solver: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmeans: Option<KMeansOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_alternations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cannot_link_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_regularization: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "is_default")]
    pub grid: GridConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub write_coefficients: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Err,
    Ri,
    Rie,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Method>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Method),
        Many(Vec<Method>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    }))
}

impl SolverConfig {
    fn overlay(self, top: SolverConfig) -> SolverConfig {
        SolverConfig {
            rho: top.rho.or(self.rho),
            max_iters: top.max_iters.or(self.max_iters),
            tol_abs: top.tol_abs.or(self.tol_abs),
            tol_rel: top.tol_rel.or(self.tol_rel),
            error_norm: top.error_norm.or(self.error_norm),
            adaptive_rho: top.adaptive_rho.or(self.adaptive_rho),
        }
    }
}

impl GridConfig {
    fn overlay(self, top: GridConfig) -> GridConfig {
        GridConfig {
            lambda0_values: top.lambda0_values.or(self.lambda0_values),
            alpha_values: top.alpha_values.or(self.alpha_values),
            seeds: top.seeds.or(self.seeds),
        }
    }
}

impl Config {
    /// Reads a JSON config. A `run.json` written by a previous command is
    /// accepted too: its `config` member is used.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let config: Config = serde_json::from_value(value)
            .with_context(|| format!("invalid config {}", path.display()))?;
        config.check_layer("config file")?;
        Ok(config)
    }

    /// Conflicts that cannot be settled by precedence within one layer.
    pub fn check_layer(&self, layer: &str) -> Result<()> {
        if self.lambda.is_some() && self.lambda0.is_some() {
            bail!("{layer} sets both lambda and lambda0; give exactly one");
        }
        if self.data.is_some() && self.synthetic.is_some() {
            bail!("{layer} sets both data and synthetic; give exactly one");
        }
        if self.constraints.is_some() && self.p.is_some() {
            bail!("{layer} sets both constraints and p; give exactly one");
        }
        Ok(())
    }

    /// Field-wise merge where `top` wins. Mutually exclusive groups
    /// (λ vs λ₀, data vs synthetic, constraints vs p) are taken whole from
    /// the layer that mentions any member.
    pub fn overlay(self, top: Config) -> Config {
        let (lambda, lambda0) = if top.lambda.is_some() || top.lambda0.is_some() {
            (top.lambda, top.lambda0)
        } else {
            (self.lambda, self.lambda0)
        };
        let (data, synthetic) = if top.data.is_some() || top.synthetic.is_some() {
            (top.data, top.synthetic)
        } else {
            (self.data, self.synthetic)
        };
        let (constraints, p) = if top.constraints.is_some() || top.p.is_some() {
            (top.constraints, top.p)
        } else {
            (self.constraints, self.p)
        };
        Config {
            data,
            synthetic,
            orientation: top.orientation.or(self.orientation),
            normalize: top.normalize.or(self.normalize),
            labels: top.labels.or(self.labels),
            constraints,
            p,
            seed: top.seed.or(self.seed),
            methods: top.methods.or(self.methods),
            n: top.n.or(self.n),
            lambda,
            lambda0,
            alpha: top.alpha.or(self.alpha),
            solver: self.solver.overlay(top.solver),
            kmeans: top.kmeans.or(self.kmeans),
            max_alternations: top.max_alternations.or(self.max_alternations),
            cannot_link_factor: top.cannot_link_factor.or(self.cannot_link_factor),
            degree_regularization: top.degree_regularization.or(self.degree_regularization),
            metrics: top.metrics.or(self.metrics),
            trials: top.trials.or(self.trials),
            points: top.points.or(self.points),
            grid: self.grid.overlay(top.grid),
            write_coefficients: top.write_coefficients.or(self.write_coefficients),
            out: top.out.or(self.out),
        }
    }
}
