//! Monte Carlo harness: coverage experiments, rate fits, and numerical
//! oracles (quadrature of the MGFs, empirical tail frequencies).

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_eps, BootstrapConfig};
use crate::certificates::{confidence_ellipsoid_from_gram, single_traj_cert, BSource, SingleTrajInputs, SnmState};
use crate::error::{check_delta, Error, Result};
use crate::estimators::{ols_batch, ols_scalar_lastpoint, ols_single_traj, BatchMode, TrajectoryMode};
use crate::io::fmt_f64;
use crate::linalg::min_eig;
use crate::lti::{simulate_batch, simulate_single, LtiSystem, SystemJson};
use crate::rng::{derive_key, keyed_rng, stable_hash, Stream};
use crate::theory::{matrix_error_bound_a, matrix_error_bound_b, scalar_error_bound, MgfKind};

/// What each replicate simulates, fits and certifies. The scenario grid holds
/// the number of experiments `N` for batch kinds and the horizon `T` for
/// single-trajectory kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Scalar last-step estimator against the scalar theorem bound.
    ScalarTheorem { horizon: usize },
    /// Last-step batch OLS against the i.i.d. matrix bounds on `A` and `B`.
    MatrixTheorem { horizon: usize },
    /// Last-step batch OLS against the confidence ellipsoid.
    Ellipsoid { horizon: usize },
    /// Controlled single-trajectory OLS against the single-trajectory certificate.
    SingleTrajectory { alpha: f64 },
    /// Any-time self-normalized bound along a scalar autonomous trajectory,
    /// with regularizer `V = regularizer`.
    SelfNormalized { regularizer: f64 },
    /// Pooled batch OLS against the bootstrap estimate.
    Bootstrap { horizon: usize, trials: usize },
    /// Batch OLS error only (no bound), for rate fits.
    BatchRate {
        horizon: usize,
        #[serde(default)]
        mode: BatchMode,
    },
    /// Single-trajectory OLS error only, for rate fits.
    SingleRate { autonomous: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ScalarA,
    MatrixA,
    MatrixB,
    EllipsoidContainment,
    EllipsoidA,
    EllipsoidB,
    SingleTheta,
    SelfNormalized,
    BootstrapA,
    BootstrapB,
    ErrorA,
    ErrorTheta,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::ScalarA => "scalar_a",
            Target::MatrixA => "matrix_a",
            Target::MatrixB => "matrix_b",
            Target::EllipsoidContainment => "ellipsoid_containment",
            Target::EllipsoidA => "ellipsoid_a",
            Target::EllipsoidB => "ellipsoid_b",
            Target::SingleTheta => "single_theta",
            Target::SelfNormalized => "self_normalized",
            Target::BootstrapA => "bootstrap_a",
            Target::BootstrapB => "bootstrap_b",
            Target::ErrorA => "error_a",
            Target::ErrorTheta => "error_theta",
        }
    }
}

impl Experiment {
    pub fn targets(&self) -> &'static [Target] {
        match self {
            Experiment::ScalarTheorem { .. } => &[Target::ScalarA],
            Experiment::MatrixTheorem { .. } => &[Target::MatrixA, Target::MatrixB],
            Experiment::Ellipsoid { .. } => &[Target::EllipsoidContainment, Target::EllipsoidA, Target::EllipsoidB],
            Experiment::SingleTrajectory { .. } => &[Target::SingleTheta],
            Experiment::SelfNormalized { .. } => &[Target::SelfNormalized],
            Experiment::Bootstrap { .. } => &[Target::BootstrapA, Target::BootstrapB],
            Experiment::BatchRate { .. } => &[Target::ErrorA],
            Experiment::SingleRate { .. } => &[Target::ErrorA, Target::ErrorTheta],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub system: SystemJson,
    pub experiment: Experiment,
    pub grid: Vec<usize>,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(id: &str, system: &LtiSystem, experiment: Experiment, grid: Vec<usize>, delta: f64, replicates: usize, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            system: SystemJson::from(system),
            experiment,
            grid,
            delta,
            replicates,
            seed,
        }
    }

    /// Seed of one replicate: `(master, hash(id), grid value, replicate)`.
    pub fn replicate_seed(&self, grid_value: usize, replicate: usize) -> u64 {
        derive_key(self.seed, &[stable_hash(&self.id), grid_value as u64, replicate as u64])
    }
}

/// Absolute slack in `error ≤ bound`, covering floating-point roundoff when
/// both sides vanish (noiseless data).
pub const COVER_ATOL: f64 = 1e-12;

/// Outcome of one replicate for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    #[serde(with = "crate::io::f64_ext")]
    pub error: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub bound: f64,
    pub covered: bool,
    /// False when the bound could not be issued (failed precondition or error).
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl ReplicateRecord {
    fn pair(replicate: usize, error: f64, bound: f64) -> Self {
        Self {
            replicate,
            error,
            bound,
            covered: error <= bound + COVER_ATOL,
            certified: true,
            note: None,
        }
    }

    fn failed(replicate: usize, error: f64, note: String) -> Self {
        Self {
            replicate,
            error,
            bound: f64::NAN,
            covered: false,
            certified: false,
            note: Some(note),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    #[serde(with = "crate::io::f64_ext")]
    pub q1: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub median: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub q3: f64,
}

/// Linear-interpolation (type 7) quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let (a, b) = (sorted[lo], sorted[hi]);
            if a == b {
                a
            } else {
                a + (h - lo as f64) * (b - a)
            }
        }
    }
}

pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    Quartiles {
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
    }
}

/// Aggregate for one `(target, grid value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: String,
    pub target: Target,
    pub grid_value: usize,
    pub replicates: usize,
    pub certified: usize,
    pub covered: usize,
    /// `covered / replicates`.
    pub coverage: f64,
    /// `covered / certified` (NaN when nothing was certified).
    #[serde(with = "crate::io::f64_ext")]
    pub certified_coverage: f64,
    pub delta: f64,
    pub error_quantiles: Quartiles,
    pub bound_quantiles: Quartiles,
    pub per_replicate: Vec<ReplicateRecord>,
}

impl CoverageReport {
    fn from_records(scenario: &Scenario, target: Target, grid_value: usize, records: Vec<ReplicateRecord>) -> Self {
        let certified = records.iter().filter(|r| r.certified).count();
        let covered = records.iter().filter(|r| r.covered).count();
        let errors: Vec<f64> = records.iter().map(|r| r.error).collect();
        let bounds: Vec<f64> = records.iter().filter(|r| r.certified).map(|r| r.bound).collect();
        Self {
            scenario: scenario.id.clone(),
            target,
            grid_value,
            replicates: records.len(),
            certified,
            covered,
            coverage: covered as f64 / records.len() as f64,
            certified_coverage: if certified > 0 {
                covered as f64 / certified as f64
            } else {
                f64::NAN
            },
            delta: scenario.delta,
            error_quantiles: quartiles(&errors),
            bound_quantiles: quartiles(&bounds),
            per_replicate: records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: Target,
    pub points: Vec<CoverageReport>,
    /// Log-log slope of the median error over the grid (three or more points).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slope: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub targets: Vec<TargetReport>,
}

impl ScenarioReport {
    pub fn target(&self, t: Target) -> Option<&TargetReport> {
        self.targets.iter().find(|r| r.target == t)
    }
}

/// Three-sigma binomial floor `1 − δ − 3√(δ(1−δ)/n)`.
pub fn coverage_floor(delta: f64, replicates: usize) -> f64 {
    1.0 - delta - 3.0 * (delta * (1.0 - delta) / replicates as f64).sqrt()
}

/// Run every replicate of every grid point. Per-replicate failures are
/// recorded, never propagated.
pub fn coverage_experiment(scenario: &Scenario) -> Result<ScenarioReport> {
    check_delta(scenario.delta)?;
    if scenario.grid.is_empty() {
        return Err(Error::InvalidArgument("coverage grid is empty".into()));
    }
    if scenario.replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be >= 1".into()));
    }
    let sys = scenario.system.to_system()?;
    check_experiment(&sys, &scenario.experiment)?;
    let targets = scenario.experiment.targets();
    let mut per_target: Vec<Vec<CoverageReport>> = vec![Vec::new(); targets.len()];
    for &g in &scenario.grid {
        let rows: Vec<Vec<ReplicateRecord>> = (0..scenario.replicates)
            .into_par_iter()
            .map(|r| run_replicate(&sys, scenario, g, r))
            .collect();
        for (k, &t) in targets.iter().enumerate() {
            let recs = rows.iter().map(|row| row[k].clone()).collect();
            per_target[k].push(CoverageReport::from_records(scenario, t, g, recs));
        }
    }
    let targets = targets
        .iter()
        .zip(per_target)
        .map(|(&target, points)| {
            let slope = if points.len() >= 3 {
                let pts: Vec<(f64, f64)> = points
                    .iter()
                    .map(|p| (p.grid_value as f64, p.error_quantiles.median))
                    .collect();
                rate_fit(&pts).ok()
            } else {
                None
            };
            TargetReport { target, points, slope }
        })
        .collect();
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        targets,
    })
}

fn check_experiment(sys: &LtiSystem, exp: &Experiment) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
    match exp {
        Experiment::ScalarTheorem { horizon } => {
            if sys.n_x() != 1 || sys.n_u() != 1 {
                return bad("scalar_theorem needs a scalar system with one input");
            }
            if *horizon < 2 {
                return bad("scalar_theorem needs horizon >= 2");
            }
        }
        Experiment::MatrixTheorem { horizon } | Experiment::Ellipsoid { horizon } => {
            if *horizon < 1 {
                return bad("horizon must be >= 1");
            }
        }
        Experiment::Bootstrap { horizon, trials } => {
            if *horizon < 1 || *trials < 1 {
                return bad("bootstrap needs horizon >= 1 and trials >= 1");
            }
        }
        Experiment::BatchRate { horizon, .. } => {
            if *horizon < 1 {
                return bad("horizon must be >= 1");
            }
        }
        Experiment::SelfNormalized { regularizer } => {
            if sys.n_x() != 1 {
                return bad("self_normalized runs on a scalar system");
            }
            if !(*regularizer > 0.0) {
                return Err(Error::SingularRegularizer);
            }
        }
        Experiment::SingleTrajectory { alpha } => {
            if !(*alpha > 0.0) {
                return bad("alpha must be positive");
            }
        }
        Experiment::SingleRate { .. } => {}
    }
    Ok(())
}

fn run_replicate(sys: &LtiSystem, sc: &Scenario, g: usize, r: usize) -> Vec<ReplicateRecord> {
    let seed = sc.replicate_seed(g, r);
    let delta = sc.delta;
    let nan_all = |note: String| -> Vec<ReplicateRecord> {
        sc.experiment
            .targets()
            .iter()
            .map(|_| ReplicateRecord::failed(r, f64::NAN, note.clone()))
            .collect()
    };
    match &sc.experiment {
        Experiment::ScalarTheorem { horizon } => {
            let batch = match simulate_batch(sys, g, *horizon, seed) {
                Ok(b) => b,
                Err(e) => return nan_all(e.to_string()),
            };
            let a = sys.a()[(0, 0)];
            let err = match ols_scalar_lastpoint(&batch, Some(a)) {
                Ok(est) => est.error.unwrap_or(f64::NAN).abs(),
                Err(e) => return nan_all(e.to_string()),
            };
            let sigma_x = sys.last_step_covariance(*horizon)[(0, 0)].sqrt();
            vec![certificate_record(r, err, scalar_error_bound(sys.sigma_w(), sigma_x, g, delta))]
        }
        Experiment::MatrixTheorem { horizon } => {
            let (ea, eb) = match batch_errors(sys, g, *horizon, seed, BatchMode::LastStep) {
                Ok(v) => v,
                Err(e) => return nan_all(e.to_string()),
            };
            let lam = min_eig(&sys.last_step_covariance(*horizon));
            vec![
                certificate_record(
                    r,
                    ea,
                    matrix_error_bound_a(lam, sys.sigma_w(), sys.n_x(), sys.n_u(), g, delta),
                ),
                certificate_record(
                    r,
                    eb,
                    matrix_error_bound_b(sys.sigma_w(), sys.sigma_u(), sys.n_x(), sys.n_u(), g, delta),
                ),
            ]
        }
        Experiment::Ellipsoid { horizon } => {
            let est = match simulate_batch(sys, g, *horizon, seed)
                .and_then(|b| ols_batch(&b, BatchMode::LastStep, Some(sys)))
            {
                Ok(e) => e,
                Err(e) => return nan_all(e.to_string()),
            };
            let errs = est.errors.expect("truth supplied");
            let cert = match confidence_ellipsoid_from_gram(&est.gram, est.samples, sys.n_x(), sys.sigma_w(), delta) {
                Ok(c) => c,
                Err(e) => {
                    return vec![
                        ReplicateRecord::failed(r, f64::NAN, e.to_string()),
                        ReplicateRecord::failed(r, errs.eps_a, e.to_string()),
                        ReplicateRecord::failed(r, errs.eps_b.unwrap_or(f64::NAN), e.to_string()),
                    ]
                }
            };
            let theta_err = &est.theta_hat - sys.theta();
            let margin = cert.containment_margin(&theta_err).unwrap_or(f64::NAN);
            let (ba, bb) = cert.block_spectral_bounds();
            let mut contain = ReplicateRecord::pair(r, cert.scale_c2 - margin, cert.scale_c2);
            contain.covered = cert.contains(&theta_err).unwrap_or(false);
            let rec_b = match (errs.eps_b, bb) {
                (Some(e), Some(b)) => ReplicateRecord::pair(r, e, b),
                _ => ReplicateRecord::failed(r, f64::NAN, "system has no inputs".into()),
            };
            vec![contain, ReplicateRecord::pair(r, errs.eps_a, ba), rec_b]
        }
        Experiment::SingleTrajectory { alpha } => {
            let traj = simulate_single(sys, g, false, seed);
            let est = match ols_single_traj(&traj, TrajectoryMode::Controlled, Some(sys)) {
                Ok(e) => e,
                Err(e) => return nan_all(e.to_string()),
            };
            let err = est.errors.expect("truth supplied").eps_theta;
            let b_hat = est.b_hat();
            let res = single_traj_cert(&SingleTrajInputs {
                gram: &est.gram,
                samples: est.samples,
                n_x: est.n_x,
                b: &b_hat,
                b_source: BSource::Estimated,
                sigma_u: sys.sigma_u(),
                sigma_w: sys.sigma_w(),
                alpha: *alpha,
                delta,
            });
            vec![match res {
                Ok(c) => ReplicateRecord::pair(r, err, c.bound.value),
                Err(e) => ReplicateRecord::failed(r, err, e.kind().to_string()),
            }]
        }
        Experiment::SelfNormalized { regularizer } => vec![self_normalized_replicate(sys, *regularizer, g, seed, delta, r)],
        Experiment::Bootstrap { horizon, trials } => {
            let batch = match simulate_batch(sys, g, *horizon, seed) {
                Ok(b) => b,
                Err(e) => return nan_all(e.to_string()),
            };
            let est = match ols_batch(&batch, BatchMode::Pooled, Some(sys)) {
                Ok(e) => e,
                Err(e) => return nan_all(e.to_string()),
            };
            let errs = est.errors.expect("truth supplied");
            let cfg = BootstrapConfig {
                trials: *trials,
                delta,
                seed: derive_key(seed, &[Stream::Bootstrap as u64]),
                sigma_w: Some(sys.sigma_w()),
                sigma_u: sys.sigma_u(),
            };
            match bootstrap_eps(&batch, &est.a_hat(), &est.b_hat(), cfg.sigma_w.unwrap(), cfg.sigma_u, cfg.trials, cfg.delta, cfg.seed) {
                Ok(b) => vec![
                    ReplicateRecord::pair(r, errs.eps_a, b.eps_a),
                    ReplicateRecord::pair(r, errs.eps_b.unwrap_or(0.0), b.eps_b),
                ],
                Err(e) => nan_all(e.to_string()),
            }
        }
        Experiment::BatchRate { horizon, mode } => match batch_errors(sys, g, *horizon, seed, *mode) {
            Ok((ea, _)) => vec![ReplicateRecord::pair(r, ea, f64::INFINITY)],
            Err(e) => nan_all(e.to_string()),
        },
        Experiment::SingleRate { autonomous } => {
            let traj = simulate_single(sys, g, *autonomous, seed);
            let mode = if *autonomous {
                TrajectoryMode::Autonomous
            } else {
                TrajectoryMode::Controlled
            };
            match ols_single_traj(&traj, mode, Some(sys)) {
                Ok(est) => {
                    let errs = est.errors.expect("truth supplied");
                    vec![
                        ReplicateRecord::pair(r, errs.eps_a, f64::INFINITY),
                        ReplicateRecord::pair(r, errs.eps_theta, f64::INFINITY),
                    ]
                }
                Err(e) => nan_all(e.to_string()),
            }
        }
    }
}

fn certificate_record(r: usize, err: f64, cert: Result<crate::theory::BoundCertificate>) -> ReplicateRecord {
    match cert {
        Ok(c) if c.precondition_ok => ReplicateRecord::pair(r, err, c.value),
        Ok(c) => {
            let mut rec = ReplicateRecord::pair(r, err, c.value);
            rec.certified = false;
            rec.note = c.violated_condition;
            rec
        }
        Err(e) => ReplicateRecord::failed(r, err, e.kind().to_string()),
    }
}

fn batch_errors(sys: &LtiSystem, n: usize, horizon: usize, seed: u64, mode: BatchMode) -> Result<(f64, f64)> {
    let batch = simulate_batch(sys, n, horizon, seed)?;
    let est = ols_batch(&batch, mode, Some(sys))?;
    let e = est.errors.expect("truth supplied");
    Ok((e.eps_a, e.eps_b.unwrap_or(0.0)))
}

/// Worst ratio `‖V̄_t^{-1/2} S_t‖² / radius_t` over `t = 1..T` along one
/// autonomous scalar trajectory; violation when the ratio exceeds one.
fn self_normalized_replicate(sys: &LtiSystem, v: f64, horizon: usize, seed: u64, delta: f64, r: usize) -> ReplicateRecord {
    let traj = simulate_single(sys, horizon, true, seed);
    let noise = traj.trajectory.recover_noise(sys);
    let states = traj.states();
    let mut st = match SnmState::new(DMatrix::from_element(1, 1, v), 1, sys.sigma_w() * sys.sigma_w()) {
        Ok(s) => s,
        Err(e) => return ReplicateRecord::failed(r, f64::NAN, e.to_string()),
    };
    let mut worst = 0.0_f64;
    for t in 0..horizon {
        st.push(
            &DVector::from_element(1, states[(t, 0)]),
            &DVector::from_element(1, noise[(t, 0)]),
        );
        let radius = st.radius(delta).expect("regularizer checked");
        worst = worst.max(st.lhs() / radius);
    }
    ReplicateRecord::pair(r, worst, 1.0)
}

/// `log y = intercept + slope · log x` by least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for two points or an exact fit).
    pub slope_stderr: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("rate fit needs >= 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositiveValue(if x > 0.0 { y } else { x }));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct sizes".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        slope_stderr: (ssr / (n - 2.0) / sxx).sqrt(),
    })
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7K15 panel: `(kronrod, |kronrod − gauss|)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

const MAX_DEPTH: usize = 60;

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (val, err) = gk15(f, a, b);
    if !val.is_finite() {
        return Err(Error::IntegrationDivergence(format!("non-finite panel on [{a}, {b}]")));
    }
    if err <= tol {
        return Ok(val);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::IntegrationDivergence(format!(
            "no convergence on [{a}, {b}] (error estimate {err:e})"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive(f, a, m, tol / 2.0, depth + 1)? + adaptive(f, m, b, tol / 2.0, depth + 1)?)
}

/// Adaptive Gauss-Kronrod integral of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    adaptive(&f, a, b, tol, 0)
}

/// Numerical MGF: `E e^{λ(X²−1)}` for the centered chi-square and, through
/// the conditional identity `E[e^{λXW} | X] = e^{λ²X²/2}`, `E e^{λ²X²/2}`
/// for the Gaussian product. Absolute accuracy about `1e-10`.
pub fn mgf_quadrature(kind: MgfKind, lambda: f64) -> Result<f64> {
    if !kind.in_domain(lambda) {
        return Err(Error::DomainExceeded {
            lambda,
            domain: kind.domain_str(),
        });
    }
    // integrand e^{-c x²} / √(2π) (times a constant prefactor)
    let (c, prefactor) = match kind {
        MgfKind::ChiSqCentered => ((1.0 - 2.0 * lambda) / 2.0, (-lambda).exp()),
        MgfKind::GaussProduct => ((1.0 - lambda * lambda) / 2.0, 1.0),
    };
    if c < 1e-8 {
        return Err(Error::IntegrationDivergence(format!(
            "lambda = {lambda} too close to the domain edge"
        )));
    }
    // e^{-c L²} = e^{-60} makes the truncated tails negligible
    let l = (60.0 / c).sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let half = integrate(|x| norm * (-c * x * x).exp(), 0.0, l, 0.5e-10 / prefactor)?;
    Ok(prefactor * 2.0 * half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    /// Fraction of replicates with `statistic ≥ t`.
    pub frequency: f64,
}

/// Empirical exceedance frequencies of a seeded scalar statistic. Replicate
/// `r` draws from the stream keyed on `(seed, r)`.
pub fn empirical_tail<F>(sampler: F, t_grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<TailPoint>>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if replicates < 1000 {
        return Err(Error::InvalidArgument(format!(
            "empirical tails need >= 1000 replicates, got {replicates}"
        )));
    }
    let draws: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| sampler(&mut keyed_rng(seed, &[r], Stream::Statistic)))
        .collect();
    Ok(t_grid
        .iter()
        .map(|&t| TailPoint {
            t,
            frequency: draws.iter().filter(|&&x| x >= t).count() as f64 / replicates as f64,
        })
        .collect())
}

/// Detail CSV of one target: `grid_value,replicate,error,bound,covered`.
pub fn detail_csv(report: &TargetReport) -> String {
    let mut out = String::from("grid_value,replicate,error,bound,covered\n");
    for p in &report.points {
        for r in &p.per_replicate {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.grid_value,
                r.replicate,
                fmt_f64(r.error),
                fmt_f64(r.bound),
                u8::from(r.covered)
            ));
        }
    }
    out
}

/// Summary CSV of one scenario, one row per `(target, grid value)`.
pub fn summary_csv(report: &ScenarioReport) -> String {
    let mut out = String::from(
        "target,grid_value,replicates,certified,covered,coverage,certified_coverage,\
error_q1,error_median,error_q3,bound_q1,bound_median,bound_q3\n",
    );
    for t in &report.targets {
        for p in &t.points {
            let e = p.error_quantiles;
            let b = p.bound_quantiles;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                t.target.name(),
                p.grid_value,
                p.replicates,
                p.certified,
                p.covered,
                fmt_f64(p.coverage),
                fmt_f64(p.certified_coverage),
                fmt_f64(e.q1),
                fmt_f64(e.median),
                fmt_f64(e.q3),
                fmt_f64(b.q1),
                fmt_f64(b.median),
                fmt_f64(b.q3)
            ));
        }
    }
    out
}
