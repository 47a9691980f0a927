//! Ordinary least-squares estimators and their raw error pieces.
//!
//! All estimators regress responses `y` on covariates `z` and return
//! `Θ̂ = argmin Σ ‖y − Θ z‖²` (an `ℓ × n` matrix). With the ground truth
//! supplied they also report the cross term `Zᵀ W` and spectral-norm errors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_extremes, solve_gram, spectral_norm, MatrixJson};
use crate::lti::{LtiSystem, SingleTrajectory, Trajectory, TrajectoryBatch};

/// Which transitions of each batch experiment feed the batch estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// Only the last transition `(x_{T-1}, u_{T-1}) → x_T` of every experiment,
    /// which makes the regression samples i.i.d.
    #[default]
    LastStep,
    /// Every transition of every experiment.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    /// `z_t = x_t`, `y_t = x_{t+1}`.
    Autonomous,
    /// `z_t = (x_t; u_t)`, `y_t = x_{t+1}`.
    Controlled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarEstimate {
    pub a_hat: f64,
    /// `e_N = â − a` when the true `a` is supplied.
    pub error: Option<f64>,
    /// `Σ x_T²`.
    pub denominator: f64,
}

/// `â = Σ x_T (x_{T+1} − u_T) / Σ x_T²` over the last transition of each
/// experiment of a scalar batch (input gain fixed at one).
pub fn ols_scalar_lastpoint(batch: &TrajectoryBatch, true_a: Option<f64>) -> Result<ScalarEstimate> {
    if batch.n_x() != 1 || batch.n_u() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "scalar estimator needs n_x = n_u = 1, got ({}, {})",
            batch.n_x(),
            batch.n_u()
        )));
    }
    let horizon = batch.horizon();
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for r in &batch.records {
        let x = r.states[(horizon - 1, 0)];
        let x_next = r.states[(horizon, 0)];
        let u = r.inputs[(horizon - 1, 0)];
        num += x * (x_next - u);
        den += x * x;
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let a_hat = num / den;
    Ok(ScalarEstimate {
        a_hat,
        error: true_a.map(|a| a_hat - a),
        denominator: den,
    })
}

/// Spectral-norm errors against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateErrors {
    /// `‖Â − A‖₂`
    pub eps_a: f64,
    /// `‖B̂ − B‖₂`, absent for autonomous fits.
    pub eps_b: Option<f64>,
    /// `‖Θ̂ − Θ‖₂`
    pub eps_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// `[Â B̂]`, `n_x × (n_x + n_u)`.
    pub theta_hat: DMatrix<f64>,
    pub n_x: usize,
    pub n_u: usize,
    /// `ZᵀZ`
    pub gram: DMatrix<f64>,
    /// `ZᵀW`, present when the truth was supplied.
    pub cross: Option<DMatrix<f64>>,
    /// Frobenius norm of `Y − Z Θ̂ᵀ`.
    pub residual_norm: f64,
    pub gram_min_eig: f64,
    pub gram_max_eig: f64,
    pub samples: usize,
    pub errors: Option<EstimateErrors>,
}

impl Estimate {
    pub fn a_hat(&self) -> DMatrix<f64> {
        self.theta_hat.columns(0, self.n_x).into_owned()
    }

    pub fn b_hat(&self) -> DMatrix<f64> {
        self.theta_hat.columns(self.n_x, self.n_u).into_owned()
    }

    /// Residual-variance estimate of `σ_w` (pooled over state coordinates).
    pub fn sigma_w_hat(&self) -> f64 {
        let dof = self.samples.saturating_sub(self.n_x + self.n_u).max(1);
        (self.residual_norm.powi(2) / (dof * self.n_x) as f64).sqrt()
    }
}

/// Regression design: covariates `Z` (rows = samples) and responses `Y`.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub z: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Process noise per sample, when the truth is known.
    pub w: Option<DMatrix<f64>>,
}

impl Design {
    fn from_transitions(
        records: &[&Trajectory],
        steps: impl Fn(&Trajectory) -> std::ops::Range<usize>,
        with_inputs: bool,
        truth: Option<&LtiSystem>,
    ) -> Self {
        let n_x = records[0].n_x();
        let n_u = if with_inputs { records[0].n_u() } else { 0 };
        let rows: usize = records.iter().map(|r| steps(r).len()).sum();
        let mut z = DMatrix::zeros(rows, n_x + n_u);
        let mut y = DMatrix::zeros(rows, n_x);
        let mut k = 0;
        for r in records {
            for t in steps(r) {
                z.view_mut((k, 0), (1, n_x)).copy_from(&r.states.row(t));
                if n_u > 0 {
                    z.view_mut((k, n_x), (1, n_u)).copy_from(&r.inputs.row(t));
                }
                y.row_mut(k).copy_from(&r.states.row(t + 1));
                k += 1;
            }
        }
        let w = truth.map(|sys| {
            let theta = if with_inputs {
                sys.theta()
            } else {
                sys.a().clone()
            };
            &y - &z * theta.transpose()
        });
        Design { z, y, w }
    }

    pub(crate) fn fit(&self, n_x: usize, n_u: usize, truth: Option<&LtiSystem>) -> Result<Estimate> {
        let gram = self.z.tr_mul(&self.z);
        let rhs = self.z.tr_mul(&self.y);
        let theta_hat = solve_gram(&gram, &rhs)?.transpose();
        let residual = &self.y - &self.z * theta_hat.transpose();
        let (lo, hi) = eig_extremes(&gram);
        let cross = self.w.as_ref().map(|w| self.z.tr_mul(w));
        let errors = truth.map(|sys| {
            let err_a = theta_hat.columns(0, n_x) - sys.a();
            let eps_b = (n_u > 0).then(|| spectral_norm(&(theta_hat.columns(n_x, n_u) - sys.b())));
            let truth_theta = if n_u > 0 { sys.theta() } else { sys.a().clone() };
            EstimateErrors {
                eps_a: spectral_norm(&err_a),
                eps_b,
                eps_theta: spectral_norm(&(&theta_hat - truth_theta)),
            }
        });
        Ok(Estimate {
            theta_hat,
            n_x,
            n_u,
            gram,
            cross,
            residual_norm: residual.norm(),
            gram_min_eig: lo,
            gram_max_eig: hi,
            samples: self.z.nrows(),
            errors,
        })
    }
}

pub(crate) fn batch_design(batch: &TrajectoryBatch, mode: BatchMode, truth: Option<&LtiSystem>) -> Result<Design> {
    let horizon = batch.horizon();
    if horizon == 0 {
        return Err(Error::InvalidArgument("batch horizon must be >= 1".into()));
    }
    if let Some(sys) = truth {
        check_truth_dims(sys, batch.n_x(), batch.n_u())?;
    }
    let records: Vec<&Trajectory> = batch.records.iter().collect();
    Ok(match mode {
        BatchMode::LastStep => Design::from_transitions(&records, |_| horizon - 1..horizon, true, truth),
        BatchMode::Pooled => Design::from_transitions(&records, |_| 0..horizon, true, truth),
    })
}

fn check_truth_dims(sys: &LtiSystem, n_x: usize, n_u: usize) -> Result<()> {
    if sys.n_x() != n_x || sys.n_u() != n_u {
        return Err(Error::DimensionMismatch(format!(
            "truth has (n_x, n_u) = ({}, {}), data has ({n_x}, {n_u})",
            sys.n_x(),
            sys.n_u()
        )));
    }
    Ok(())
}

/// Batch least squares `[Â B̂]`. In [`BatchMode::LastStep`] each experiment
/// contributes its final transition only.
pub fn ols_batch(batch: &TrajectoryBatch, mode: BatchMode, truth: Option<&LtiSystem>) -> Result<Estimate> {
    batch_design(batch, mode, truth)?.fit(batch.n_x(), batch.n_u(), truth)
}

/// Single-trajectory least squares over all `T` transitions.
pub fn ols_single_traj(
    traj: &SingleTrajectory,
    mode: TrajectoryMode,
    truth: Option<&LtiSystem>,
) -> Result<Estimate> {
    let design = single_design(traj, mode, truth)?;
    let n_u = match mode {
        TrajectoryMode::Autonomous => 0,
        TrajectoryMode::Controlled => traj.trajectory.n_u(),
    };
    design.fit(traj.trajectory.n_x(), n_u, truth)
}

pub(crate) fn single_design(
    traj: &SingleTrajectory,
    mode: TrajectoryMode,
    truth: Option<&LtiSystem>,
) -> Result<Design> {
    let horizon = traj.horizon();
    if horizon == 0 {
        return Err(Error::InvalidArgument("trajectory horizon must be >= 1".into()));
    }
    let with_inputs = match mode {
        TrajectoryMode::Autonomous => false,
        TrajectoryMode::Controlled => {
            if !traj.has_inputs {
                return Err(Error::InvalidArgument(
                    "controlled fit needs a trajectory with recorded inputs".into(),
                ));
            }
            true
        }
    };
    if let Some(sys) = truth {
        if with_inputs {
            check_truth_dims(sys, traj.trajectory.n_x(), traj.trajectory.n_u())?;
        } else if sys.n_x() != traj.trajectory.n_x() {
            return Err(Error::DimensionMismatch("truth state dimension differs from data".into()));
        }
    }
    Ok(Design::from_transitions(&[&traj.trajectory], |_| 0..horizon, with_inputs, truth))
}

/// JSON form of an [`Estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub theta_hat: MatrixJson,
    pub n_x: usize,
    pub n_u: usize,
    pub gram: MatrixJson,
    pub gram_min_eig: f64,
    pub gram_max_eig: f64,
    pub residual_norm: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cross: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub errors: Option<EstimateErrors>,
}

impl From<&Estimate> for EstimateJson {
    fn from(e: &Estimate) -> Self {
        EstimateJson {
            theta_hat: (&e.theta_hat).into(),
            n_x: e.n_x,
            n_u: e.n_u,
            gram: (&e.gram).into(),
            gram_min_eig: e.gram_min_eig,
            gram_max_eig: e.gram_max_eig,
            residual_norm: e.residual_norm,
            samples: e.samples,
            cross: e.cross.as_ref().map(Into::into),
            errors: e.errors,
        }
    }
}
