//! Parametric bootstrap of `ε_A`, `ε_B`: regenerate synthetic batches under
//! the fitted model, refit, and take percentiles of the refit deviations.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::estimators::{batch_design, ols_batch, BatchMode};
use crate::io::fmt_f64;
use crate::linalg::{solve_gram, spectral_norm};
use crate::lti::{rollout_with_noise, LtiSystem, TrajectoryBatch};
use crate::rng::{derive_key, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    #[serde(with = "crate::io::f64_ext")]
    pub eps_a: f64,
    #[serde(with = "crate::io::f64_ext")]
    pub eps_b: f64,
    #[serde(with = "crate::io::f64_vec")]
    pub samples_a: Vec<f64>,
    #[serde(with = "crate::io::f64_vec")]
    pub samples_b: Vec<f64>,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Trials whose refit Gram was singular (recorded as `+inf`).
    pub singular_refits: usize,
    pub sigma_w: f64,
    pub sigma_u: f64,
    /// Whether `sigma_w` came from the pooled residuals rather than the caller.
    pub sigma_w_estimated: bool,
}

impl BootstrapResult {
    /// `trial,eps_A_tilde,eps_B_tilde`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,eps_A_tilde,eps_B_tilde\n");
        for (i, (a, b)) in self.samples_a.iter().zip(&self.samples_b).enumerate() {
            out.push_str(&format!("{i},{},{}\n", fmt_f64(*a), fmt_f64(*b)));
        }
        out
    }
}

/// 1-based nearest rank `⌈M(1−δ)⌉`, clamped to `[1, M]`.
pub fn nearest_rank(m: usize, delta: f64) -> usize {
    // the small offset keeps exact products such as 200·0.95 from rounding up
    let r = (m as f64 * (1.0 - delta) - 1e-9).ceil();
    (r.max(1.0) as usize).min(m)
}

/// Nearest-rank `100(1−δ)`th percentile of `samples`.
pub fn percentile(samples: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("percentile of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[nearest_rank(sorted.len(), delta) - 1])
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Known noise scale; `None` estimates it from the pooled fit.
    pub sigma_w: Option<f64>,
    pub sigma_u: f64,
}

/// Fit `(Â, B̂)` by pooled least squares on `data`, then bootstrap.
pub fn bootstrap_from_data(data: &TrajectoryBatch, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    let fit = ols_batch(data, BatchMode::Pooled, None)?;
    let (sigma_w, estimated) = match cfg.sigma_w {
        Some(s) => (s, false),
        None => (fit.sigma_w_hat(), true),
    };
    let mut res = bootstrap_eps(data, &fit.a_hat(), &fit.b_hat(), sigma_w, cfg.sigma_u, cfg.trials, cfg.delta, cfg.seed)?;
    res.sigma_w_estimated = estimated;
    Ok(res)
}

/// Bootstrap around a given pooled fit.
///
/// Trial `ℓ` simulates every experiment `i` of `data` from its recorded `x_0`
/// with fresh `û ~ N(0, σ_u² I)`, `ŵ ~ N(0, σ_w² I)` keyed on `(seed, ℓ, i)`,
/// refits by pooled least squares and records `‖Ã − Â‖₂`, `‖B̃ − B̂‖₂`.
/// The refit deviation is computed from the synthetic noise directly, so
/// noiseless synthetic data gives exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_eps(
    data: &TrajectoryBatch,
    a_hat: &DMatrix<f64>,
    b_hat: &DMatrix<f64>,
    sigma_w: f64,
    sigma_u: f64,
    trials: usize,
    delta: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    check_delta(delta)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one trial".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("bootstrap needs data".into()));
    }
    if data.horizon() == 0 {
        return Err(Error::InvalidArgument("bootstrap needs horizon >= 1".into()));
    }
    let fitted = LtiSystem::new(a_hat.clone(), b_hat.clone(), sigma_w, sigma_u)?;
    if fitted.n_x() != data.n_x() || fitted.n_u() != data.n_u() {
        return Err(Error::DimensionMismatch("fitted model and data differ in dimensions".into()));
    }
    let horizon = data.horizon();
    let n_x = data.n_x();
    let n_u = data.n_u();
    let pairs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_key(seed, &[Stream::Bootstrap as u64, trial]);
            let (records, noises): (Vec<_>, Vec<_>) = data
                .records
                .iter()
                .enumerate()
                .map(|(i, rec)| {
                    let x0: Vec<f64> = rec.states.row(0).iter().copied().collect();
                    rollout_with_noise(&fitted, &x0, horizon, trial_seed, &[i as u64])
                })
                .unzip();
            let synthetic = TrajectoryBatch::new(records, trial_seed).expect("records share dimensions");
            let design = batch_design(&synthetic, BatchMode::Pooled, None).expect("horizon checked above");
            let mut w = DMatrix::zeros(design.z.nrows(), n_x);
            for (k, noise) in noises.iter().enumerate() {
                w.view_mut((k * horizon, 0), (horizon, n_x)).copy_from(noise);
            }
            // Θ̃ − Θ̂ = (ZᵀZ)^{-1} Zᵀ Ŵ: the pooled refit minus the model it was drawn from.
            match solve_gram(&design.z.tr_mul(&design.z), &design.z.tr_mul(&w)) {
                Ok(dev) => {
                    let dev = dev.transpose();
                    (
                        spectral_norm(&dev.columns(0, n_x).into_owned()),
                        spectral_norm(&dev.columns(n_x, n_u).into_owned()),
                    )
                }
                Err(_) => (f64::INFINITY, f64::INFINITY),
            }
        })
        .collect();
    let (samples_a, samples_b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let singular_refits = samples_a.iter().filter(|v| v.is_infinite()).count();
    Ok(BootstrapResult {
        eps_a: percentile(&samples_a, delta)?,
        eps_b: percentile(&samples_b, delta)?,
        samples_a,
        samples_b,
        trials,
        delta,
        seed,
        singular_refits,
        sigma_w,
        sigma_u,
        sigma_w_estimated: false,
    })
}
