//! Ground-truth LTI systems `x_{t+1} = A x_t + B u_t + w_t`, their
//! controllability Gramians and state covariances, and seeded simulation.
//!
//! Conventions used throughout the crate:
//!
//! * every rollout starts at `x_0 = 0` unless an explicit initial state is given;
//! * a trajectory of horizon `T` holds states `x_0..=x_T` and inputs `u_0..u_{T-1}`;
//! * `u_t ~ N(0, σ_u² I)` and `w_t ~ N(0, σ_w² I)` are drawn from separate
//!   keyed streams (see [`crate::rng`]).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};
use crate::linalg::{block_diag, symmetrize, MatrixJson};
use crate::rng::{keyed_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    sigma_w: f64,
    sigma_u: f64,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, sigma_w: f64, sigma_u: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows but A is {}x{}",
                b.nrows(),
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("system matrices must be finite".into()));
        }
        if !(sigma_w >= 0.0 && sigma_w.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma_w = {sigma_w} must be >= 0")));
        }
        if !(sigma_u >= 0.0 && sigma_u.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma_u = {sigma_u} must be >= 0")));
        }
        Ok(Self { a, b, sigma_w, sigma_u })
    }

    /// Scalar system `x_{t+1} = a x_t + u_t + w_t`.
    pub fn scalar(a: f64, sigma_w: f64, sigma_u: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            sigma_w,
            sigma_u,
        )
    }

    /// Discrete-time double integrator with `σ_w = 0.1`, `σ_u = 1`.
    pub fn double_integrator() -> Self {
        Self::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            0.1,
            1.0,
        )
        .expect("preset is valid")
    }

    /// Autonomous system `x_{t+1} = A x_t + w_t` (no input channel).
    pub fn autonomous(a: DMatrix<f64>, sigma_w: f64) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::zeros(n, 0), sigma_w, 0.0)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }
    pub fn sigma_u(&self) -> f64 {
        self.sigma_u
    }
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn with_noise(&self, sigma_w: f64, sigma_u: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), sigma_w, sigma_u)
    }

    /// `[A B]`, the parameter matrix estimated by least squares.
    pub fn theta(&self) -> DMatrix<f64> {
        let mut theta = DMatrix::zeros(self.n_x(), self.n_x() + self.n_u());
        theta.columns_mut(0, self.n_x()).copy_from(&self.a);
        theta.columns_mut(self.n_x(), self.n_u()).copy_from(&self.b);
        theta
    }

    /// `Σ_x = σ_u² Λ_C(A,B,T) + σ_w² Λ_C(A,I,T)`, the covariance of
    /// `x_{T+1}` when started from `x_0 = 0`.
    pub fn state_covariance(&self, horizon: usize) -> DMatrix<f64> {
        let n = self.n_x();
        let input = gramian(&self.a, &self.b, horizon).expect("validated dimensions");
        let noise = gramian(&self.a, &DMatrix::identity(n, n), horizon).expect("validated");
        symmetrize(&(input * self.sigma_u.powi(2) + noise * self.sigma_w.powi(2)))
    }

    /// Block-diagonal joint covariance of `(x_{T+1}, u_{T+1})`: `blkdiag(Σ_x, σ_u² I)`.
    pub fn joint_covariance(&self, horizon: usize) -> DMatrix<f64> {
        let sx = self.state_covariance(horizon);
        let su = DMatrix::identity(self.n_u(), self.n_u()) * self.sigma_u.powi(2);
        block_diag(&[&sx, &su])
    }

    /// Exact covariance of the last-step covariate `x_{T-1}` of a zero-started
    /// trajectory with horizon `T` (the regressor the last-step estimators use).
    pub fn last_step_covariance(&self, horizon: usize) -> DMatrix<f64> {
        match horizon {
            0 | 1 => DMatrix::zeros(self.n_x(), self.n_x()),
            h => self.state_covariance(h - 2),
        }
    }
}

/// `Λ_C(A,B,T) = Σ_{t=0}^{T} A^t B Bᵀ (Aᵀ)^t`, computed by the recursion
/// `M ← A M Aᵀ + B Bᵀ` (T+1 steps) and symmetrized.
pub fn gramian(a: &DMatrix<f64>, b: &DMatrix<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gramian needs square A and B with matching rows (A {}x{}, B {}x{})",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let bbt = b * b.transpose();
    let mut m = DMatrix::zeros(a.nrows(), a.nrows());
    for _ in 0..=horizon {
        m = a * &m * a.transpose() + &bbt;
    }
    Ok(symmetrize(&m))
}

/// One recorded rollout: states `x_0..=x_T` as rows of a `(T+1) × n_x`
/// matrix, inputs `u_0..u_{T-1}` as rows of a `T × n_u` matrix (`n_u = 0`
/// for autonomous runs).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.nrows().saturating_sub(1)
    }
    pub fn n_x(&self) -> usize {
        self.states.ncols()
    }
    pub fn n_u(&self) -> usize {
        self.inputs.ncols()
    }

    fn validate(&self) -> Result<()> {
        if self.states.nrows() == 0 {
            return Err(Error::DimensionMismatch("trajectory has no states".into()));
        }
        if self.inputs.nrows() != self.horizon() {
            return Err(Error::DimensionMismatch(format!(
                "{} states need {} inputs, got {}",
                self.states.nrows(),
                self.horizon(),
                self.inputs.nrows()
            )));
        }
        Ok(())
    }

    /// Process noise recovered as `w_t = x_{t+1} − A x_t − B u_t`, one row per step.
    pub fn recover_noise(&self, sys: &LtiSystem) -> DMatrix<f64> {
        let horizon = self.horizon();
        let x_now = self.states.rows(0, horizon);
        let x_next = self.states.rows(1, horizon);
        let mut w = x_next - x_now * sys.a().transpose();
        if self.n_u() > 0 {
            w -= &self.inputs * sys.b().transpose();
        }
        w
    }
}

/// Data from `N` independent experiments of a common horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub records: Vec<Trajectory>,
    pub seed: u64,
}

impl TrajectoryBatch {
    pub fn new(records: Vec<Trajectory>, seed: u64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidArgument("a batch needs at least one experiment".into()))?;
        let (n_x, n_u, horizon) = (first.n_x(), first.n_u(), first.horizon());
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if r.n_x() != n_x || r.n_u() != n_u || r.horizon() != horizon {
                return Err(Error::DimensionMismatch(format!(
                    "experiment {i} has (n_x, n_u, T) = ({}, {}, {}), expected ({n_x}, {n_u}, {horizon})",
                    r.n_x(),
                    r.n_u(),
                    r.horizon()
                )));
            }
        }
        Ok(Self { records, seed })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
    pub fn horizon(&self) -> usize {
        self.records[0].horizon()
    }
    pub fn n_x(&self) -> usize {
        self.records[0].n_x()
    }
    pub fn n_u(&self) -> usize {
        self.records[0].n_u()
    }
}

/// One long rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleTrajectory {
    pub trajectory: Trajectory,
    /// False when the run was autonomous (no input channel).
    pub has_inputs: bool,
    pub seed: u64,
}

impl SingleTrajectory {
    pub fn horizon(&self) -> usize {
        self.trajectory.horizon()
    }
    pub fn states(&self) -> &DMatrix<f64> {
        &self.trajectory.states
    }
    pub fn inputs(&self) -> Option<&DMatrix<f64>> {
        self.has_inputs.then_some(&self.trajectory.inputs)
    }
}

/// Simulate `n` independent zero-started experiments of horizon `horizon`.
///
/// Experiment `i` draws from streams keyed on `(seed, i)`, so the batch is
/// identical whatever the rayon schedule.
pub fn simulate_batch(sys: &LtiSystem, n: usize, horizon: usize, seed: u64) -> Result<TrajectoryBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("number of experiments must be >= 1".into()));
    }
    let x0 = vec![0.0; sys.n_x()];
    let records: Vec<Trajectory> = (0..n as u64)
        .into_par_iter()
        .map(|i| rollout(sys, &x0, horizon, false, seed, &[i]))
        .collect();
    TrajectoryBatch::new(records, seed)
}

/// Simulate a single zero-started rollout.
pub fn simulate_single(sys: &LtiSystem, horizon: usize, autonomous: bool, seed: u64) -> SingleTrajectory {
    let x0 = DVector::zeros(sys.n_x());
    simulate_single_from(sys, &x0, horizon, autonomous, seed).expect("x0 has the state dimension")
}

/// Single rollout from an explicit initial state.
pub fn simulate_single_from(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    horizon: usize,
    autonomous: bool,
    seed: u64,
) -> Result<SingleTrajectory> {
    if x0.len() != sys.n_x() {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, system has n_x = {}",
            x0.len(),
            sys.n_x()
        )));
    }
    let trajectory = rollout(sys, x0.as_slice(), horizon, autonomous, seed, &[0]);
    Ok(SingleTrajectory {
        trajectory,
        has_inputs: !autonomous && sys.n_u() > 0,
        seed,
    })
}

/// Core rollout with keyed streams `(seed, path, ProcessNoise|Input)`.
pub(crate) fn rollout(
    sys: &LtiSystem,
    x0: &[f64],
    horizon: usize,
    autonomous: bool,
    seed: u64,
    path: &[u64],
) -> Trajectory {
    rollout_impl(sys, x0, horizon, autonomous, seed, path, None)
}

/// [`rollout`] that also returns the process noise `w_0..w_{T-1}` (`T × n_x`).
pub(crate) fn rollout_with_noise(
    sys: &LtiSystem,
    x0: &[f64],
    horizon: usize,
    seed: u64,
    path: &[u64],
) -> (Trajectory, DMatrix<f64>) {
    let mut noise = vec![0.0; horizon * sys.n_x()];
    let traj = rollout_impl(sys, x0, horizon, false, seed, path, Some(&mut noise));
    (traj, DMatrix::from_row_slice(horizon, sys.n_x(), &noise))
}

fn rollout_impl(
    sys: &LtiSystem,
    x0: &[f64],
    horizon: usize,
    autonomous: bool,
    seed: u64,
    path: &[u64],
    mut noise: Option<&mut Vec<f64>>,
) -> Trajectory {
    let n = sys.n_x();
    let m = if autonomous { 0 } else { sys.n_u() };
    // Row-major copies keep the inner loop on plain slices.
    let a: Vec<f64> = (0..n * n).map(|k| sys.a[(k / n, k % n)]).collect();
    let b: Vec<f64> = (0..n * m).map(|k| sys.b[(k / m, k % m)]).collect();
    let mut rng_w = keyed_rng(seed, path, Stream::ProcessNoise);
    let mut rng_u = keyed_rng(seed, path, Stream::Input);

    let mut states = vec![0.0; (horizon + 1) * n];
    let mut inputs = vec![0.0; horizon * m];
    states[..n].copy_from_slice(x0);
    let mut u = vec![0.0; m];
    for t in 0..horizon {
        for ui in u.iter_mut() {
            *ui = draw(&mut rng_u, sys.sigma_u);
        }
        inputs[t * m..(t + 1) * m].copy_from_slice(&u);
        let (done, rest) = states.split_at_mut((t + 1) * n);
        let x = &done[t * n..];
        let next = &mut rest[..n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += a[i * n + j] * x[j];
            }
            for j in 0..m {
                acc += b[i * m + j] * u[j];
            }
            let w = draw(&mut rng_w, sys.sigma_w);
            if let Some(buf) = noise.as_deref_mut() {
                buf[t * n + i] = w;
            }
            next[i] = acc + w;
        }
    }
    Trajectory {
        states: DMatrix::from_row_slice(horizon + 1, n, &states),
        inputs: DMatrix::from_row_slice(horizon, m, &inputs),
    }
}

#[inline]
fn draw<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        let z: f64 = rng.sample(StandardNormal);
        scale * z
    }
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Serialized form of an [`LtiSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
    pub sigma_w: f64,
    pub sigma_u: f64,
}

impl From<&LtiSystem> for SystemJson {
    fn from(s: &LtiSystem) -> Self {
        SystemJson {
            a: (&s.a).into(),
            b: (&s.b).into(),
            sigma_w: s.sigma_w,
            sigma_u: s.sigma_u,
        }
    }
}

impl SystemJson {
    pub fn to_system(&self) -> Result<LtiSystem> {
        LtiSystem::new(self.a.to_matrix()?, self.b.to_matrix()?, self.sigma_w, self.sigma_u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub states: MatrixJson,
    pub inputs: MatrixJson,
}

/// JSON envelope: system metadata, seed and the raw records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnvelope {
    pub kind: String,
    pub seed: u64,
    pub system: SystemJson,
    pub n_x: usize,
    pub n_u: usize,
    pub horizon: usize,
    pub experiments: usize,
    pub records: Vec<RecordJson>,
}

impl TrajectoryEnvelope {
    pub fn new(kind: &str, sys: &LtiSystem, batch: &TrajectoryBatch) -> Self {
        TrajectoryEnvelope {
            kind: kind.to_string(),
            seed: batch.seed,
            system: sys.into(),
            n_x: batch.n_x(),
            n_u: batch.n_u(),
            horizon: batch.horizon(),
            experiments: batch.len(),
            records: batch
                .records
                .iter()
                .map(|r| RecordJson {
                    states: (&r.states).into(),
                    inputs: (&r.inputs).into(),
                })
                .collect(),
        }
    }

    pub fn to_batch(&self) -> Result<TrajectoryBatch> {
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(Trajectory {
                    states: r.states.to_matrix()?,
                    inputs: r.inputs.to_matrix()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TrajectoryBatch::new(records, self.seed)
    }
}

/// CSV with header `experiment,t,x_0..x_{n_x-1},u_0..u_{n_u-1}`; one row per
/// state, the input cells of the final row left empty.
pub fn batch_to_csv(batch: &TrajectoryBatch) -> String {
    let (n_x, n_u) = (batch.n_x(), batch.n_u());
    let mut out = csv_header(n_x, n_u);
    for (e, r) in batch.records.iter().enumerate() {
        for t in 0..=r.horizon() {
            out.push_str(&format!("{e},{t}"));
            for i in 0..n_x {
                out.push(',');
                out.push_str(&fmt_f64(r.states[(t, i)]));
            }
            for j in 0..n_u {
                out.push(',');
                if t < r.horizon() {
                    out.push_str(&fmt_f64(r.inputs[(t, j)]));
                }
            }
            out.push('\n');
        }
    }
    out
}

fn csv_header(n_x: usize, n_u: usize) -> String {
    let mut cols = vec!["experiment".to_string(), "t".to_string()];
    cols.extend((0..n_x).map(|i| format!("x_{i}")));
    cols.extend((0..n_u).map(|j| format!("u_{j}")));
    cols.join(",") + "\n"
}

/// Parse the CSV written by [`batch_to_csv`].
pub fn batch_from_csv(text: &str, seed: u64) -> Result<TrajectoryBatch> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory CSV".into()))?
        .split(',')
        .collect();
    if header.len() < 2 || header[0] != "experiment" || header[1] != "t" {
        return Err(Error::Parse("trajectory CSV must start with `experiment,t`".into()));
    }
    let n_x = header.iter().filter(|h| h.starts_with("x_")).count();
    let n_u = header.iter().filter(|h| h.starts_with("u_")).count();
    if n_x == 0 || header.len() != 2 + n_x + n_u {
        return Err(Error::Parse("unrecognised trajectory CSV header".into()));
    }

    let mut experiments: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} cells", lineno + 2, cells.len())));
        }
        let e: usize = cells[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad experiment index on row {}", lineno + 2)))?;
        let t: usize = cells[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad time index on row {}", lineno + 2)))?;
        if e == experiments.len() {
            experiments.push((Vec::new(), Vec::new(), 0));
        }
        let Some(rec) = experiments.get_mut(e) else {
            return Err(Error::Parse(format!("experiments out of order on row {}", lineno + 2)));
        };
        if t != rec.2 {
            return Err(Error::Parse(format!("time steps out of order on row {}", lineno + 2)));
        }
        rec.2 += 1;
        for c in &cells[2..2 + n_x] {
            rec.0.push(parse_f64(c)?);
        }
        let u_cells = &cells[2 + n_x..];
        if u_cells.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        for c in u_cells {
            rec.1.push(parse_f64(c)?);
        }
    }
    let records = experiments
        .into_iter()
        .map(|(xs, us, rows)| {
            if us.len() != rows.saturating_sub(1) * n_u {
                return Err(Error::Parse("input rows do not match state rows".into()));
            }
            Ok(Trajectory {
                states: DMatrix::from_row_slice(rows, n_x, &xs),
                inputs: DMatrix::from_row_slice(rows.saturating_sub(1), n_u, &us),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectoryBatch::new(records, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gramian_examples() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        assert!(approx(gramian(&one(0.0), &one(1.0), 3).unwrap()[(0, 0)], 1.0, 1e-15));
        assert!(approx(gramian(&one(0.5), &one(1.0), 2).unwrap()[(0, 0)], 1.3125, 1e-15));

        let sys = LtiSystem::double_integrator();
        let g = gramian(sys.a(), sys.b(), 2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.05, 0.3, 0.3, 3.0]);
        assert!((g - expected).abs().max() < 1e-12);
    }

    #[test]
    fn gramian_dimension_mismatch() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::zeros(3, 1);
        assert!(matches!(gramian(&a, &b, 1), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn gramian_converges_for_stable_scalar() {
        let g = gramian(&DMatrix::from_element(1, 1, 0.5), &DMatrix::from_element(1, 1, 1.0), 200).unwrap();
        assert!(approx(g[(0, 0)], 4.0 / 3.0, 1e-10));
    }

    #[test]
    fn state_covariance_examples() {
        let s = LtiSystem::scalar(0.0, 1.0, 1.0).unwrap();
        assert!(approx(s.state_covariance(5)[(0, 0)], 2.0, 1e-15));
        let s = LtiSystem::scalar(0.9, 1.0, 1.0).unwrap();
        assert!(approx(s.state_covariance(1)[(0, 0)], 3.62, 1e-12));

        // Brute-force composition for the double integrator.
        let di = LtiSystem::double_integrator();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0805, 0.303, 0.303, 3.03]);
        assert!((di.state_covariance(2) - expected).abs().max() < 1e-12);

        let joint = di.joint_covariance(2);
        assert_eq!(joint.shape(), (3, 3));
        assert!(approx(joint[(2, 2)], 1.0, 0.0));
        assert_eq!(joint[(0, 2)], 0.0);
    }

    #[test]
    fn invalid_systems_rejected() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(LtiSystem::new(a, DMatrix::zeros(2, 1), 1.0, 1.0).is_err());
        let a = DMatrix::<f64>::zeros(2, 2);
        assert!(LtiSystem::new(a.clone(), DMatrix::zeros(3, 1), 1.0, 1.0).is_err());
        assert!(LtiSystem::new(a, DMatrix::zeros(2, 1), -1.0, 1.0).is_err());
    }

    #[test]
    fn noiseless_simulation_is_zero() {
        let sys = LtiSystem::double_integrator().with_noise(0.0, 0.0).unwrap();
        let batch = simulate_batch(&sys, 4, 5, 3).unwrap();
        assert!(batch.records.iter().all(|r| r.states.iter().all(|&v| v == 0.0)));
        let single = simulate_single(&sys, 10, true, 3);
        assert!(single.states().iter().all(|&v| v == 0.0));
        assert!(single.inputs().is_none());
    }

    #[test]
    fn simulation_is_deterministic() {
        let sys = LtiSystem::double_integrator();
        assert_eq!(simulate_batch(&sys, 8, 6, 11).unwrap(), simulate_batch(&sys, 8, 6, 11).unwrap());
        assert_ne!(simulate_batch(&sys, 8, 6, 11).unwrap(), simulate_batch(&sys, 8, 6, 12).unwrap());
        assert_eq!(simulate_single(&sys, 50, false, 4), simulate_single(&sys, 50, false, 4));
    }

    #[test]
    fn recovered_noise_is_consistent() {
        let sys = LtiSystem::double_integrator().with_noise(0.0, 1.0).unwrap();
        let batch = simulate_batch(&sys, 2, 6, 1).unwrap();
        let w = batch.records[0].recover_noise(&sys);
        assert!(w.abs().max() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let sys = LtiSystem::double_integrator();
        let batch = simulate_batch(&sys, 3, 4, 9).unwrap();
        let csv = batch_to_csv(&batch);
        assert_eq!(csv.lines().count(), 1 + 3 * 5);
        assert!(csv.starts_with("experiment,t,x_0,x_1,u_0\n"));
        let back = batch_from_csv(&csv, 9).unwrap();
        assert_eq!(back, batch);
    }

    #[test]
    fn json_envelope_round_trip() {
        let sys = LtiSystem::double_integrator();
        let batch = simulate_batch(&sys, 2, 3, 5).unwrap();
        let env = TrajectoryEnvelope::new("batch", &sys, &batch);
        let text = serde_json::to_string(&env).unwrap();
        let back: TrajectoryEnvelope = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_batch().unwrap(), batch);
        assert_eq!(back.system.to_system().unwrap(), sys);
    }
}
