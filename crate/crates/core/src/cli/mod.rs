//! Command layer behind the `sysid` binary: `simulate`, `certify`,
//! `coverage` and `figure`. Each command reads a [`Config`], writes its
//! artifacts under an output directory and is deterministic given the seed.

pub mod config;
pub mod svg;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{BoundChoice, Config, DataKind};

use crate::bootstrap::{bootstrap_from_data, BootstrapConfig, BootstrapResult};
use crate::certificates::{
    confidence_ellipsoid_from_gram, single_traj_cert, single_traj_cert_sweep, BSource, EllipsoidJson,
    SingleTrajCertificate, SingleTrajInputs,
};
use crate::error::{Error, Result};
use crate::estimators::{ols_batch, ols_single_traj, BatchMode, Estimate, EstimateJson, TrajectoryMode};
use crate::io::{fmt_f64, to_json_pretty, write_file};
use crate::linalg::min_eig;
use crate::lti::{
    batch_from_csv, batch_to_csv, simulate_batch, simulate_single, LtiSystem, SingleTrajectory, SystemJson,
    Trajectory, TrajectoryBatch, TrajectoryEnvelope,
};
use crate::montecarlo::{coverage_experiment, detail_csv, quartiles, summary_csv, Scenario, ScenarioReport};
use crate::rng::{derive_key, stable_hash};
use crate::theory::{matrix_error_bound_a, matrix_error_bound_b, scalar_error_bound, BoundCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Certify,
    Coverage,
    Figure,
}

/// Load the config, resolve seed and output directory, and run `cmd` inside
/// a thread pool of the configured size.
pub fn run(cmd: Command, config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let cfg = Config::load(config_path)?;
    let seed = cfg.resolved_seed(seed)?;
    let out: PathBuf = match (out, &cfg.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::config("output_dir", "no --out given and no output_dir configured")),
    };
    let exec = || -> Result<Vec<PathBuf>> {
        match cmd {
            Command::Simulate => cmd_simulate(&cfg, &out, seed),
            Command::Certify => cmd_certify(&cfg, &out, seed).map(|(_, files)| files),
            Command::Coverage => cmd_coverage(&cfg, &out, seed).map(|(_, files)| files),
            Command::Figure => cmd_figure(&cfg, &out, seed).map(|(_, files)| files),
        }
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(exec),
        None => exec(),
    }
}

fn emit(out: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_file(&path, contents)?;
    files.push(path);
    Ok(())
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| Error::config(name, "section missing from config"))
}

/// Writes `trajectories.csv` and `trajectories.json`.
pub fn cmd_simulate(cfg: &Config, out: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let sc = section(&cfg.simulate, "simulate")?;
    let sys = cfg.build_system()?;
    let (kind, batch) = match sc.mode {
        DataKind::Batch => ("batch", simulate_batch(&sys, sc.experiments, sc.horizon, seed)?),
        DataKind::Single => {
            if sc.experiments != 1 {
                return Err(Error::config("simulate.experiments", "single mode simulates exactly one trajectory"));
            }
            let single = simulate_single(&sys, sc.horizon, sc.autonomous, seed);
            ("single", TrajectoryBatch::new(vec![single.trajectory], seed)?)
        }
    };
    let mut files = Vec::new();
    emit(out, "trajectories.csv", &batch_to_csv(&batch), &mut files)?;
    emit(
        out,
        "trajectories.json",
        &to_json_pretty(&TrajectoryEnvelope::new(kind, &sys, &batch))?,
        &mut files,
    )?;
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub kind: DataKind,
    pub source: String,
    pub experiments: usize,
    pub horizon: usize,
    pub samples: usize,
    /// False when `sigma_u = 0`: inputs vanish and only `A` is fitted.
    pub inputs_used: bool,
}

/// A certificate that could not be issued, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub certificate: String,
    pub error: String,
    pub message: String,
}

impl Flag {
    fn new(certificate: &str, e: &Error) -> Self {
        Self {
            certificate: certificate.into(),
            error: e.kind().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TheoryCertificates {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scalar: Option<BoundCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix_a: Option<BoundCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix_b: Option<BoundCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyBundle {
    pub seed: u64,
    pub delta: f64,
    pub system: SystemJson,
    pub data: DataSummary,
    pub estimate: EstimateJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theory: Option<TheoryCertificates>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ellipsoid: Option<EllipsoidJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub single_trajectory: Option<SingleTrajCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap: Option<BootstrapResult>,
    pub flags: Vec<Flag>,
}

fn strip_inputs(batch: &TrajectoryBatch) -> Result<TrajectoryBatch> {
    let records = batch
        .records
        .iter()
        .map(|r| Trajectory {
            states: r.states.clone(),
            inputs: DMatrix::zeros(r.inputs.nrows(), 0),
        })
        .collect();
    TrajectoryBatch::new(records, batch.seed)
}

fn default_bounds(kind: DataKind) -> Vec<BoundChoice> {
    match kind {
        DataKind::Batch => vec![BoundChoice::Theory, BoundChoice::Ellipsoid, BoundChoice::Bootstrap],
        DataKind::Single => vec![BoundChoice::SingleTrajectory, BoundChoice::Bootstrap],
    }
}

/// Estimate plus every requested certificate, written to `certify.json`
/// (and `trajectories.csv`, `bootstrap.csv` when applicable).
pub fn cmd_certify(cfg: &Config, out: &Path, seed: u64) -> Result<(CertifyBundle, Vec<PathBuf>)> {
    let cc = section(&cfg.certify, "certify")?;
    let sys = cfg.build_system()?;
    let delta = cfg.delta;
    let bounds = cc.bounds.clone().unwrap_or_else(|| default_bounds(cc.data));
    for b in &bounds {
        let ok = match cc.data {
            DataKind::Batch => *b != BoundChoice::SingleTrajectory,
            DataKind::Single => matches!(b, BoundChoice::SingleTrajectory | BoundChoice::Bootstrap),
        };
        if !ok {
            return Err(Error::config("certify.bounds", format!("{b:?} does not apply to {:?} data", cc.data)));
        }
    }

    let (batch, source) = match &cc.data_csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            (batch_from_csv(&text, seed)?, format!("csv:{}", path.display()))
        }
        None => match cc.data {
            DataKind::Batch => (simulate_batch(&sys, cc.experiments, cc.horizon, seed)?, "simulated".into()),
            DataKind::Single => {
                let t = simulate_single(&sys, cc.horizon, false, seed);
                (TrajectoryBatch::new(vec![t.trajectory], seed)?, "simulated".into())
            }
        },
    };
    if batch.n_x() != sys.n_x() || batch.n_u() != sys.n_u() {
        return Err(Error::config("certify.data_csv", "data dimensions differ from the configured system"));
    }
    if cc.data == DataKind::Single && batch.len() != 1 {
        return Err(Error::config("certify.data", "single data needs exactly one trajectory"));
    }
    let mut files = Vec::new();
    emit(out, "trajectories.csv", &batch_to_csv(&batch), &mut files)?;

    let inputs_used = !(sys.sigma_u() == 0.0 && sys.n_u() > 0);
    let (fit_batch, truth) = if inputs_used {
        (batch.clone(), sys.clone())
    } else {
        (strip_inputs(&batch)?, LtiSystem::autonomous(sys.a().clone(), sys.sigma_w())?)
    };
    let est: Estimate = match cc.data {
        DataKind::Batch => ols_batch(&fit_batch, cc.estimator, Some(&truth))?,
        DataKind::Single => {
            let traj = SingleTrajectory {
                trajectory: fit_batch.records[0].clone(),
                has_inputs: inputs_used,
                seed,
            };
            let mode = if inputs_used {
                TrajectoryMode::Controlled
            } else {
                TrajectoryMode::Autonomous
            };
            ols_single_traj(&traj, mode, Some(&truth))?
        }
    };

    let mut flags = Vec::new();
    let mut bundle = CertifyBundle {
        seed,
        delta,
        system: SystemJson::from(&sys),
        data: DataSummary {
            kind: cc.data,
            source,
            experiments: batch.len(),
            horizon: batch.horizon(),
            samples: est.samples,
            inputs_used,
        },
        estimate: EstimateJson::from(&est),
        theory: None,
        ellipsoid: None,
        single_trajectory: None,
        bootstrap: None,
        flags: Vec::new(),
    };
    let last_step = cc.estimator == BatchMode::LastStep;

    if bounds.contains(&BoundChoice::Theory) {
        if !last_step {
            flags.push(Flag::new(
                "theory",
                &Error::InvalidArgument("a priori bounds assume one independent sample per experiment (last_step)".into()),
            ));
        } else {
            let h = batch.horizon();
            let n = batch.len();
            let cov = sys.last_step_covariance(h);
            let mut th = TheoryCertificates::default();
            if sys.n_x() == 1 && sys.n_u() == 1 {
                match scalar_error_bound(sys.sigma_w(), cov[(0, 0)].sqrt(), n, delta) {
                    Ok(c) => th.scalar = Some(c),
                    Err(e) => flags.push(Flag::new("theory.scalar", &e)),
                }
            }
            match matrix_error_bound_a(min_eig(&cov), sys.sigma_w(), sys.n_x(), sys.n_u(), n, delta) {
                Ok(c) => th.matrix_a = Some(c),
                Err(e) => flags.push(Flag::new("theory.matrix_a", &e)),
            }
            if sys.n_u() > 0 {
                match matrix_error_bound_b(sys.sigma_w(), sys.sigma_u(), sys.n_x(), sys.n_u(), n, delta) {
                    Ok(c) => th.matrix_b = Some(c),
                    Err(e) => flags.push(Flag::new("theory.matrix_b", &e)),
                }
            }
            bundle.theory = Some(th);
        }
    }

    if bounds.contains(&BoundChoice::Ellipsoid) {
        if !last_step {
            flags.push(Flag::new(
                "ellipsoid",
                &Error::InvalidArgument("the confidence ellipsoid needs independent samples (last_step)".into()),
            ));
        } else {
            match confidence_ellipsoid_from_gram(&est.gram, est.samples, est.n_x, sys.sigma_w(), delta) {
                Ok(c) => bundle.ellipsoid = Some(c.to_json()),
                Err(e) => flags.push(Flag::new("ellipsoid", &e)),
            }
        }
    }

    if bounds.contains(&BoundChoice::SingleTrajectory) {
        let b_hat = est.b_hat();
        let inp = SingleTrajInputs {
            gram: &est.gram,
            samples: est.samples,
            n_x: est.n_x,
            b: &b_hat,
            b_source: if inputs_used { BSource::Estimated } else { BSource::None },
            sigma_u: sys.sigma_u(),
            sigma_w: sys.sigma_w(),
            alpha: cc.alpha,
            delta,
        };
        let res = match &cc.alphas {
            Some(list) => single_traj_cert_sweep(&inp, list),
            None => single_traj_cert(&inp),
        };
        match res {
            Ok(c) => bundle.single_trajectory = Some(c),
            Err(e) => flags.push(Flag::new("single_trajectory", &e)),
        }
    }

    if bounds.contains(&BoundChoice::Bootstrap) && cc.bootstrap.enabled {
        let bcfg = BootstrapConfig {
            trials: cc.bootstrap.trials,
            delta,
            seed: derive_key(seed, &[stable_hash("certify/bootstrap")]),
            sigma_w: (!cc.bootstrap.estimate_sigma_w).then_some(sys.sigma_w()),
            sigma_u: sys.sigma_u(),
        };
        match bootstrap_from_data(&fit_batch, &bcfg) {
            Ok(r) => {
                emit(out, "bootstrap.csv", &r.to_csv(), &mut files)?;
                bundle.bootstrap = Some(r);
            }
            Err(e) => flags.push(Flag::new("bootstrap", &e)),
        }
    }

    bundle.flags = flags;
    emit(out, "certify.json", &to_json_pretty(&bundle)?, &mut files)?;
    Ok((bundle, files))
}

fn check_id(id: &str, field: &str) -> Result<()> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(Error::config(field, format!("`{id}` must be non-empty [A-Za-z0-9_-]")));
    }
    Ok(())
}

/// Runs every configured scenario and writes `<id>_<target>.csv` detail
/// files, `<id>_summary.csv` and `<id>_summary.json` (without per-replicate rows).
pub fn cmd_coverage(cfg: &Config, out: &Path, seed: u64) -> Result<(Vec<ScenarioReport>, Vec<PathBuf>)> {
    let cc = section(&cfg.coverage, "coverage")?;
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for (i, s) in cc.scenarios.iter().enumerate() {
        let field = format!("coverage.scenarios[{i}]");
        check_id(&s.id, &format!("{field}.id"))?;
        let sys = match &s.system {
            Some(sc) => sc.build(&format!("{field}.system"))?,
            None => cfg.build_system()?,
        };
        let scenario = Scenario::new(
            &s.id,
            &sys,
            s.experiment.clone(),
            s.grid.clone(),
            s.delta.unwrap_or(cfg.delta),
            s.replicates,
            seed,
        );
        let report = coverage_experiment(&scenario).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::config(&field, m),
            other => other,
        })?;
        for t in &report.targets {
            emit(out, &format!("{}_{}.csv", s.id, t.target.name()), &detail_csv(t), &mut files)?;
        }
        emit(out, &format!("{}_summary.csv", s.id), &summary_csv(&report), &mut files)?;
        let mut summary = report.clone();
        for t in &mut summary.targets {
            for p in &mut t.points {
                p.per_replicate.clear();
            }
        }
        emit(out, &format!("{}_summary.json", s.id), &to_json_pretty(&summary)?, &mut files)?;
        reports.push(report);
    }
    Ok((reports, files))
}

/// One row of a figure CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub grid_value: usize,
    pub series: String,
    pub kind: String,
    #[serde(with = "crate::io::f64_ext")]
    pub median: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub q1: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePanel {
    pub name: String,
    pub rows: Vec<FigureRow>,
    /// Runs without a certificate at each grid value.
    pub skipped: Vec<(usize, usize)>,
}

impl FigurePanel {
    pub fn series(&self, series: &str, kind: &str) -> Vec<&FigureRow> {
        self.rows.iter().filter(|r| r.series == series && r.kind == kind).collect()
    }

    fn csv(&self) -> String {
        let mut s = String::from("grid_value,series,kind,median,q1,q3\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.grid_value,
                r.series,
                r.kind,
                fmt_f64(r.median),
                fmt_f64(r.q1),
                fmt_f64(r.q3)
            ));
        }
        s
    }
}

/// Per-run values `(series, kind) -> value`, `None` when the run had no certificate.
type RunValues = Option<Vec<(&'static str, &'static str, f64)>>;

fn aggregate(name: &str, grid: &[usize], runs: &[Vec<RunValues>]) -> FigurePanel {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (gi, &g) in grid.iter().enumerate() {
        let ok: Vec<&Vec<(&str, &str, f64)>> = runs[gi].iter().flatten().collect();
        skipped.push((g, runs[gi].len() - ok.len()));
        let Some(first) = ok.first() else { continue };
        for (k, (series, kind, _)) in first.iter().enumerate() {
            let vals: Vec<f64> = ok.iter().map(|v| v[k].2).collect();
            let q = quartiles(&vals);
            rows.push(FigureRow {
                grid_value: g,
                series: series.to_string(),
                kind: kind.to_string(),
                median: q.median,
                q1: q.q1,
                q3: q.q3,
            });
        }
    }
    FigurePanel {
        name: name.into(),
        rows,
        skipped,
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn panel_svg(panel: &FigurePanel, title: &str, x_label: &str) -> String {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &panel.rows {
        let k = (r.series.clone(), r.kind.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut series_names: Vec<String> = Vec::new();
    for (s, _) in &keys {
        if !series_names.contains(s) {
            series_names.push(s.clone());
        }
    }
    let bands: Vec<svg::Band> = keys
        .iter()
        .map(|(s, k)| svg::Band {
            label: format!("{s} {k}"),
            color: COLORS[series_names.iter().position(|n| n == s).unwrap_or(0) % COLORS.len()],
            dashed: k == "error",
            points: panel
                .series(s, k)
                .iter()
                .map(|r| (r.grid_value as f64, r.q1, r.median, r.q3))
                .collect(),
        })
        .collect();
    svg::render(title, x_label, "spectral-norm error", &bands)
}

fn figure_seed(seed: u64, panel: &str, g: usize, run: usize) -> u64 {
    derive_key(seed, &[stable_hash(panel), g as u64, run as u64])
}

/// Three panels, each over `runs` independent runs: the single-trajectory
/// certificate against `T`, the ellipsoid block bounds against `N`, and the
/// bootstrap estimates against `N` (on the same batches as the ellipsoid panel).
pub fn cmd_figure(cfg: &Config, out: &Path, seed: u64) -> Result<(Vec<FigurePanel>, Vec<PathBuf>)> {
    let default = config::FigureConfig::default();
    let fc = cfg.figure.as_ref().unwrap_or(&default);
    let sys = cfg.build_system()?;
    let delta = cfg.delta;
    let runs = fc.runs;

    let single_runs: Vec<Vec<RunValues>> = fc
        .horizons
        .iter()
        .map(|&t| {
            (0..runs)
                .into_par_iter()
                .map(|r| {
                    let traj = simulate_single(&sys, t, false, figure_seed(seed, "figure/single_trajectory", t, r));
                    let est = ols_single_traj(&traj, TrajectoryMode::Controlled, Some(&sys)).ok()?;
                    let b_hat = est.b_hat();
                    let cert = single_traj_cert_sweep(
                        &SingleTrajInputs {
                            gram: &est.gram,
                            samples: est.samples,
                            n_x: est.n_x,
                            b: &b_hat,
                            b_source: BSource::Estimated,
                            sigma_u: sys.sigma_u(),
                            sigma_w: sys.sigma_w(),
                            alpha: fc.alphas[0],
                            delta,
                        },
                        &fc.alphas,
                    )
                    .ok()?;
                    let err = est.errors?.eps_theta;
                    Some(vec![("theta", "bound", cert.bound.value), ("theta", "error", err)])
                })
                .collect()
        })
        .collect();

    let batch_runs: Vec<Vec<(RunValues, RunValues)>> = fc
        .experiments
        .iter()
        .map(|&n| {
            (0..runs)
                .into_par_iter()
                .map(|r| {
                    let Ok(batch) = simulate_batch(&sys, n, fc.horizon, figure_seed(seed, "figure/batch", n, r)) else {
                        return (None, None);
                    };
                    let ellipsoid = (|| {
                        let est = ols_batch(&batch, BatchMode::LastStep, Some(&sys)).ok()?;
                        let cert =
                            confidence_ellipsoid_from_gram(&est.gram, est.samples, est.n_x, sys.sigma_w(), delta).ok()?;
                        let (ba, bb) = cert.block_spectral_bounds();
                        let e = est.errors?;
                        Some(vec![
                            ("A", "bound", ba),
                            ("A", "error", e.eps_a),
                            ("B", "bound", bb?),
                            ("B", "error", e.eps_b?),
                        ])
                    })();
                    let boot = (|| {
                        let est = ols_batch(&batch, BatchMode::Pooled, Some(&sys)).ok()?;
                        let res = bootstrap_from_data(
                            &batch,
                            &BootstrapConfig {
                                trials: fc.bootstrap_trials,
                                delta,
                                seed: figure_seed(seed, "figure/bootstrap", n, r),
                                sigma_w: Some(sys.sigma_w()),
                                sigma_u: sys.sigma_u(),
                            },
                        )
                        .ok()?;
                        let e = est.errors?;
                        Some(vec![
                            ("A", "bound", res.eps_a),
                            ("A", "error", e.eps_a),
                            ("B", "bound", res.eps_b),
                            ("B", "error", e.eps_b?),
                        ])
                    })();
                    (ellipsoid, boot)
                })
                .collect()
        })
        .collect();
    let (ell_runs, boot_runs): (Vec<Vec<RunValues>>, Vec<Vec<RunValues>>) = batch_runs
        .into_iter()
        .map(|v| v.into_iter().unzip())
        .unzip();

    let panels = vec![
        aggregate("single_trajectory", &fc.horizons, &single_runs),
        aggregate("ellipsoid", &fc.experiments, &ell_runs),
        aggregate("bootstrap", &fc.experiments, &boot_runs),
    ];
    let meta = [
        ("Single-trajectory certificate", "trajectory length T"),
        ("Confidence-ellipsoid bounds", "number of experiments N"),
        ("Bootstrap estimates", "number of experiments N"),
    ];
    let mut files = Vec::new();
    for (p, (title, x)) in panels.iter().zip(meta) {
        emit(out, &format!("{}.csv", p.name), &p.csv(), &mut files)?;
        emit(out, &format!("{}.svg", p.name), &panel_svg(p, title, x), &mut files)?;
    }
    emit(out, "figure.json", &to_json_pretty(&panels)?, &mut files)?;
    Ok((panels, files))
}
