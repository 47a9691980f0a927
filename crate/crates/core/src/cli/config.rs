//! Scenario configuration (TOML, `schema = 1`, unknown keys rejected).

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::BatchMode;
use crate::lti::LtiSystem;
use crate::montecarlo::Experiment;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    /// Mandatory unless `--seed` is given; there is no clock-based default.
    pub seed: Option<u64>,
    /// Worker threads for the inner Monte Carlo loops.
    pub threads: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Used when `--out` is not given.
    pub output_dir: Option<PathBuf>,
    pub system: SystemConfig,
    pub simulate: Option<SimulateConfig>,
    pub certify: Option<CertifyConfig>,
    pub coverage: Option<CoverageConfig>,
    pub figure: Option<FigureConfig>,
}

fn default_delta() -> f64 {
    0.05
}

/// Either a named preset or inline matrices (rows as arrays); `sigma_w` and
/// `sigma_u` override the preset's noise scales.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub preset: Option<String>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<Vec<f64>>>,
    pub sigma_w: Option<f64>,
    pub sigma_u: Option<f64>,
}

fn rows_to_matrix(rows: &[Vec<f64>], field: &str, cols_if_empty: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, cols_if_empty));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::config(field, "rows have different lengths"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

impl SystemConfig {
    pub fn build(&self, field: &str) -> Result<LtiSystem> {
        let base = match (&self.preset, &self.a) {
            (Some(_), Some(_)) => {
                return Err(Error::config(format!("{field}.preset"), "give either a preset or matrices, not both"))
            }
            (Some(p), None) => match p.as_str() {
                "double_integrator" => LtiSystem::double_integrator(),
                other => {
                    return Err(Error::config(
                        format!("{field}.preset"),
                        format!("unknown preset `{other}` (known: double_integrator)"),
                    ))
                }
            },
            (None, Some(a)) => {
                let a = rows_to_matrix(a, &format!("{field}.a"), 0)?;
                let b = match &self.b {
                    Some(b) => rows_to_matrix(b, &format!("{field}.b"), 0)?,
                    None => DMatrix::zeros(a.nrows(), 0),
                };
                let sw = self
                    .sigma_w
                    .ok_or_else(|| Error::config(format!("{field}.sigma_w"), "required with inline matrices"))?;
                let su = self.sigma_u.unwrap_or(0.0);
                return LtiSystem::new(a, b, sw, su).map_err(|e| Error::config(field, e.to_string()));
            }
            (None, None) => return Err(Error::config(field, "needs `preset` or `a`")),
        };
        if self.b.is_some() {
            return Err(Error::config(format!("{field}.b"), "not allowed together with a preset"));
        }
        base.with_noise(
            self.sigma_w.unwrap_or(base.sigma_w()),
            self.sigma_u.unwrap_or(base.sigma_u()),
        )
        .map_err(|e| Error::config(field, e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Batch,
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub mode: DataKind,
    #[serde(default = "one")]
    pub experiments: usize,
    pub horizon: usize,
    #[serde(default)]
    pub autonomous: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundChoice {
    Theory,
    Ellipsoid,
    SingleTrajectory,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSettings {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Estimate `sigma_w` from the pooled residuals instead of using the system's.
    #[serde(default)]
    pub estimate_sigma_w: bool,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            trials: default_trials(),
            estimate_sigma_w: false,
        }
    }
}

fn default_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub data: DataKind,
    #[serde(default = "one")]
    pub experiments: usize,
    pub horizon: usize,
    #[serde(default)]
    pub estimator: BatchMode,
    /// Defaults to every bound applicable to the data kind.
    pub bounds: Option<Vec<BoundChoice>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// When set, the first `alpha` satisfying the ordering condition is used.
    pub alphas: Option<Vec<f64>>,
    /// Re-ingest a trajectory CSV instead of simulating.
    pub data_csv: Option<PathBuf>,
    #[serde(default)]
    pub bootstrap: BootstrapSettings,
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub experiment: Experiment,
    pub grid: Vec<usize>,
    pub replicates: usize,
    pub delta: Option<f64>,
    /// Overrides the top-level system.
    pub system: Option<SystemConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Single-trajectory lengths `T` of the left panel.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    /// Batch sizes `N` of the ellipsoid and bootstrap panels.
    #[serde(default = "default_experiments")]
    pub experiments: Vec<usize>,
    /// Per-experiment horizon of the batch panels.
    #[serde(default = "default_batch_horizon")]
    pub horizon: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub bootstrap_trials: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            horizons: default_horizons(),
            experiments: default_experiments(),
            horizon: default_batch_horizon(),
            alphas: default_alphas(),
            bootstrap_trials: default_trials(),
        }
    }
}

fn default_runs() -> usize {
    10
}
fn default_horizons() -> Vec<usize> {
    vec![250, 500, 1000, 2000, 4000]
}
fn default_experiments() -> Vec<usize> {
    vec![50, 100, 200, 400, 800]
}
fn default_batch_horizon() -> usize {
    6
}
fn default_alphas() -> Vec<f64> {
    vec![1.0, 1.5, 2.0, 4.0]
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema),
            ));
        }
        check_delta_field(self.delta, "delta")?;
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be >= 1"));
        }
        if let Some(c) = &self.coverage {
            if c.scenarios.is_empty() {
                return Err(Error::config("coverage.scenarios", "no scenarios"));
            }
            for (i, s) in c.scenarios.iter().enumerate() {
                if s.grid.is_empty() {
                    return Err(Error::config(format!("coverage.scenarios[{i}].grid"), "grid is empty"));
                }
                if s.replicates == 0 {
                    return Err(Error::config(format!("coverage.scenarios[{i}].replicates"), "must be >= 1"));
                }
                if let Some(d) = s.delta {
                    check_delta_field(d, &format!("coverage.scenarios[{i}].delta"))?;
                }
            }
        }
        if let Some(f) = &self.figure {
            if f.runs == 0 {
                return Err(Error::config("figure.runs", "must be >= 1"));
            }
            if f.horizons.is_empty() {
                return Err(Error::config("figure.horizons", "grid is empty"));
            }
            if f.experiments.is_empty() {
                return Err(Error::config("figure.experiments", "grid is empty"));
            }
            if f.alphas.is_empty() || f.alphas.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::config("figure.alphas", "needs positive values"));
            }
        }
        if let Some(c) = &self.certify {
            if c.horizon == 0 {
                return Err(Error::config("certify.horizon", "must be >= 1"));
            }
            if !(c.alpha > 0.0) {
                return Err(Error::config("certify.alpha", "must be positive"));
            }
            if c.bootstrap.enabled && c.bootstrap.trials == 0 {
                return Err(Error::config("certify.bootstrap.trials", "must be >= 1"));
            }
        }
        if let Some(s) = &self.simulate {
            if s.experiments == 0 {
                return Err(Error::config("simulate.experiments", "must be >= 1"));
            }
        }
        Ok(())
    }

    /// Seed after an optional command-line override.
    pub fn resolved_seed(&self, overridden: Option<u64>) -> Result<u64> {
        overridden
            .or(self.seed)
            .ok_or_else(|| Error::config("seed", "missing (a fixed seed is required)"))
    }

    pub fn build_system(&self) -> Result<LtiSystem> {
        self.system.build("system")
    }
}

fn check_delta_field(delta: f64, field: &str) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("{delta} is outside (0, 1]")))
    }
}
