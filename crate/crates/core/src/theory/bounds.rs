//! Data-independent error bounds for the least-squares estimators.
//!
//! Every formula returns a [`BoundCertificate`]. Sample-size preconditions
//! never abort the computation; a failed precondition is recorded on the
//! certificate so callers can study behaviour outside the validity region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::linalg::{eig_extremes, log_det_ratio, loewner_margin, psd_tolerance};
use crate::lti::gramian;

/// Which formula produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    ScalarError,
    ScalarGramLower,
    ScalarCrossUpper,
    CrossTermNorm,
    MinEigLower,
    MatrixErrorA,
    MatrixErrorB,
    LwmBound,
    EllipsoidA,
    EllipsoidB,
    SingleTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    #[serde(with = "crate::io::f64_ext")]
    pub value: f64,
    pub delta: f64,
    pub source: BoundSource,
    pub precondition_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violated_condition: Option<String>,
}

impl BoundCertificate {
    pub fn new(value: f64, delta: f64, source: BoundSource) -> Self {
        Self {
            value,
            delta,
            source,
            precondition_ok: true,
            violated_condition: None,
        }
    }

    /// Record a sample-size requirement `have >= need`.
    fn require(mut self, have: f64, need: f64, name: &str) -> Self {
        if have < need {
            self.precondition_ok = false;
            self.violated_condition = Some(format!("{name}: need >= {need:.4}, have {have}"));
        }
        self
    }
}

fn check_count(n: usize, name: &str) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument(format!("{name} must be >= 1")))
    } else {
        Ok(())
    }
}

/// `|â − a| ≤ 4 (σ_w/σ_x) √(log(4/δ)/N)` w.p. `1 − δ`, valid for `N ≥ 32 log(2/δ)`.
pub fn scalar_error_bound(sigma_w: f64, sigma_x: f64, n: usize, delta: f64) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n, "N")?;
    let nf = n as f64;
    let value = 4.0 * sigma_w / sigma_x * ((4.0 / delta).ln() / nf).sqrt();
    Ok(BoundCertificate::new(value, delta, BoundSource::ScalarError).require(
        nf,
        32.0 * (2.0 / delta).ln(),
        "N >= 32 log(2/delta)",
    ))
}

/// `Σ x_T² ≥ σ_x² N/2` w.p. `1 − δ`, valid for `N ≥ 32 log(1/δ)`.
pub fn scalar_gram_lower_bound(sigma_x: f64, n: usize, delta: f64) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n, "N")?;
    let nf = n as f64;
    Ok(
        BoundCertificate::new(sigma_x * sigma_x * nf / 2.0, delta, BoundSource::ScalarGramLower).require(
            nf,
            32.0 * (1.0 / delta).ln(),
            "N >= 32 log(1/delta)",
        ),
    )
}

/// `|Σ x_T w_T| ≤ 2 σ_x σ_w √(N log(2/δ))` w.p. `1 − δ`, valid for `N ≥ ½ log(2/δ)`.
pub fn scalar_cross_upper_bound(sigma_x: f64, sigma_w: f64, n: usize, delta: f64) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n, "N")?;
    let nf = n as f64;
    let l = (2.0 / delta).ln();
    Ok(
        BoundCertificate::new(2.0 * sigma_x * sigma_w * (nf * l).sqrt(), delta, BoundSource::ScalarCrossUpper)
            .require(nf, 0.5 * l, "N >= 0.5 log(2/delta)"),
    )
}

/// `‖Σ x_i w_iᵀ‖₂ ≤ 4‖Σ_x‖^{1/2}‖Σ_w‖^{1/2} √(N(n+m) log(9/δ))` w.p. `1 − δ`,
/// valid for `N ≥ ½(n+m) log(9/δ)`.
pub fn cross_term_norm_bound(
    norm_sigma_x: f64,
    norm_sigma_w: f64,
    n_samples: usize,
    n: usize,
    m: usize,
    delta: f64,
) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n_samples, "N")?;
    let nf = n_samples as f64;
    let dim = (n + m) as f64;
    let l = (9.0 / delta).ln();
    let value = 4.0 * norm_sigma_x.sqrt() * norm_sigma_w.sqrt() * (nf * dim * l).sqrt();
    Ok(BoundCertificate::new(value, delta, BoundSource::CrossTermNorm).require(
        nf,
        0.5 * dim * l,
        "N >= 0.5 (n+m) log(9/delta)",
    ))
}

/// `λ_min(Σ x_i x_iᵀ) ≥ λ_min(Σ_x) N/2` w.p. `1 − 2δ`, valid for `N ≥ 24 n log(9/δ)`.
pub fn min_eig_lower_bound(lambda_min_sigma: f64, n_samples: usize, n: usize, delta: f64) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n_samples, "N")?;
    let nf = n_samples as f64;
    Ok(
        BoundCertificate::new(lambda_min_sigma * nf / 2.0, delta, BoundSource::MinEigLower).require(
            nf,
            24.0 * n as f64 * (9.0 / delta).ln(),
            "N >= 24 n log(9/delta)",
        ),
    )
}

fn matrix_rate(n_x: usize, n_u: usize, n_samples: usize, delta: f64) -> f64 {
    ((2 * n_x + n_u) as f64 * (54.0 / delta).ln() / n_samples as f64).sqrt()
}

fn matrix_requirement(cert: BoundCertificate, n_x: usize, n_u: usize, n_samples: usize, delta: f64) -> BoundCertificate {
    cert.require(
        n_samples as f64,
        24.0 * (n_x + n_u) as f64 * (54.0 / delta).ln(),
        "N >= 24 (n_x+n_u) log(54/delta)",
    )
}

/// `‖Â − A‖₂ ≤ 8σ_w λ_min^{-1/2}(Σ_x) √((2n_x+n_u) log(54/δ)/N)`.
pub fn matrix_error_bound_a(
    lambda_min_sigma_x: f64,
    sigma_w: f64,
    n_x: usize,
    n_u: usize,
    n_samples: usize,
    delta: f64,
) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n_samples, "N")?;
    let value = if lambda_min_sigma_x > 0.0 {
        8.0 * sigma_w / lambda_min_sigma_x.sqrt() * matrix_rate(n_x, n_u, n_samples, delta)
    } else {
        f64::INFINITY
    };
    Ok(matrix_requirement(
        BoundCertificate::new(value, delta, BoundSource::MatrixErrorA),
        n_x,
        n_u,
        n_samples,
        delta,
    ))
}

/// `‖B̂ − B‖₂ ≤ (8σ_w/σ_u) √((2n_x+n_u) log(54/δ)/N)`.
pub fn matrix_error_bound_b(
    sigma_w: f64,
    sigma_u: f64,
    n_x: usize,
    n_u: usize,
    n_samples: usize,
    delta: f64,
) -> Result<BoundCertificate> {
    check_delta(delta)?;
    check_count(n_samples, "N")?;
    if !(sigma_u > 0.0) {
        return Err(Error::ZeroSigmaU);
    }
    let value = 8.0 * sigma_w / sigma_u * matrix_rate(n_x, n_u, n_samples, delta);
    Ok(matrix_requirement(
        BoundCertificate::new(value, delta, BoundSource::MatrixErrorB),
        n_x,
        n_u,
        n_samples,
        delta,
    ))
}

/// Both bounds of the i.i.d. matrix theorem (jointly valid w.p. `1 − δ`).
pub fn matrix_error_bounds(
    lambda_min_sigma_x: f64,
    sigma_w: f64,
    sigma_u: f64,
    n_x: usize,
    n_u: usize,
    n_samples: usize,
    delta: f64,
) -> Result<(BoundCertificate, BoundCertificate)> {
    Ok((
        matrix_error_bound_a(lambda_min_sigma_x, sigma_w, n_x, n_u, n_samples, delta)?,
        matrix_error_bound_b(sigma_w, sigma_u, n_x, n_u, n_samples, delta)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallTail {
    /// `(ν²p²/8) k ⌊T/k⌋`
    pub threshold: f64,
    /// `exp(−⌊T/k⌋ p²/8)`
    pub probability: f64,
}

/// Small-ball concentration for a `(k, ν, p)`-BMSB process:
/// `P(Σ φ_t² ≤ threshold) ≤ probability`.
pub fn small_ball_tail(k: usize, nu: f64, p: f64, horizon: usize) -> Result<SmallBallTail> {
    if k == 0 || k > horizon {
        return Err(Error::InvalidBlock { k, horizon });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (0, 1]")));
    }
    if !(nu > 0.0) {
        return Err(Error::NonPositiveValue(nu));
    }
    let blocks = (horizon / k) as f64;
    Ok(SmallBallTail {
        threshold: nu * nu * p * p / 8.0 * k as f64 * blocks,
        probability: (-blocks * p * p / 8.0).exp(),
    })
}

/// `Γ_i = σ_w² Σ_{j=0}^{i−1} A^j (A^j)ᵀ`, the conditional covariance of
/// `x_{t+i}` given `x_t` for the autonomous system.
pub fn noise_gramian(a: &DMatrix<f64>, sigma_w: f64, i: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if i == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    Ok(gramian(a, &DMatrix::identity(n, n), i - 1)? * (sigma_w * sigma_w))
}

/// Small-ball probability of the autonomous Gaussian case.
pub const AUTONOMOUS_BMSB_P: f64 = 3.0 / 20.0;

/// BMSB margin `(ν_v, p) = (√(vᵀ Γ_{⌈k/2⌉} v), 3/20)` of `⟨x_t, v⟩` for the
/// autonomous system driven by `N(0, σ_w² I)` noise.
pub fn bmsb_margin_autonomous(a: &DMatrix<f64>, sigma_w: f64, k: usize, v: &DVector<f64>) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument("block length k must be >= 1".into()));
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitVector(norm));
    }
    if v.len() != a.nrows() {
        return Err(Error::DimensionMismatch("direction and A differ in dimension".into()));
    }
    let gamma = noise_gramian(a, sigma_w, k.div_ceil(2))?;
    let q = (v.transpose() * gamma * v)[(0, 0)];
    Ok((q.max(0.0).sqrt(), AUTONOMOUS_BMSB_P))
}

/// Inputs of the general linear-response bound.
#[derive(Debug, Clone)]
pub struct LwmInputs<'a> {
    pub k: usize,
    pub p: f64,
    pub gamma_min: &'a DMatrix<f64>,
    pub gamma_max: &'a DMatrix<f64>,
    pub sigma_w: f64,
    /// Response dimension ℓ.
    pub ell: usize,
    pub horizon: usize,
    pub delta: f64,
}

/// `‖Θ̂ − Θ‖ ≤ (90σ_w/p) √((ℓ + n log(10/p) + log det Γ̄ + log(1/δ)) / (T λ_min(Γ_min)))`,
/// `Γ̄ = Γ_max Γ_min^{-1}`, valid w.p. `1 − 3δ` once
/// `T ≥ (10k/p²)(log(1/δ) + 2n log(10/p) + log det Γ̄)`.
pub fn lwm_bound(inp: &LwmInputs<'_>) -> Result<BoundCertificate> {
    check_delta(inp.delta)?;
    check_count(inp.horizon, "T")?;
    let n = inp.gamma_min.nrows();
    if inp.gamma_min.ncols() != n || inp.gamma_max.shape() != (n, n) {
        return Err(Error::DimensionMismatch("Gamma_min and Gamma_max must be square of equal size".into()));
    }
    if !(inp.p > 0.0 && inp.p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {} must lie in (0, 1]", inp.p)));
    }
    let (lam_min, _) = eig_extremes(inp.gamma_min);
    if !(lam_min > 0.0) {
        return Err(Error::InvalidArgument("Gamma_min must be positive definite".into()));
    }
    let margin = loewner_margin(inp.gamma_min, inp.gamma_max);
    if margin < -psd_tolerance(&[inp.gamma_min, inp.gamma_max]) {
        return Err(Error::NotOrdered(margin));
    }
    let log_det = log_det_ratio(inp.gamma_max, inp.gamma_min)
        .ok_or_else(|| Error::InvalidArgument("Gamma_max Gamma_min^-1 is not positive definite".into()))?;
    let nf = n as f64;
    let log_10p = (10.0 / inp.p).ln();
    let log_inv_delta = (1.0 / inp.delta).ln();
    let numer = inp.ell as f64 + nf * log_10p + log_det + log_inv_delta;
    let value = 90.0 * inp.sigma_w / inp.p * (numer / (inp.horizon as f64 * lam_min)).sqrt();
    let need = 10.0 * inp.k as f64 / (inp.p * inp.p) * (log_inv_delta + 2.0 * nf * log_10p + log_det);
    Ok(BoundCertificate::new(value, inp.delta, BoundSource::LwmBound).require(
        inp.horizon as f64,
        need,
        "T >= (10k/p^2)(log(1/delta) + 2n log(10/p) + log det Gamma_bar)",
    ))
}

/// Stability regime used to pick the BMSB block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum KRegime {
    /// `‖A^k‖ ≤ τ ρ^k` with `ρ < 1`.
    StrictlyStable { tau: f64, rho: f64, sigma_w: f64 },
    /// Orthogonal `A`.
    Orthogonal { horizon: usize, n: usize, delta: f64 },
}

/// Block length `k`, rounded up and at least 1.
///
/// Strictly stable: `k = log(2σ_w²τ²/(1−ρ²)) / (1−ρ)`, with `k = 1` whenever the
/// log argument falls below `e`. Orthogonal: `k = T / (n log(n/δ))`.
pub fn choose_k(regime: KRegime) -> Result<usize> {
    let raw = match regime {
        KRegime::StrictlyStable { tau, rho, sigma_w } => {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::UnstableRho(rho));
            }
            if tau < 1.0 {
                return Err(Error::InvalidArgument(format!("tau = {tau} must be >= 1")));
            }
            let arg = 2.0 * sigma_w * sigma_w * tau * tau / (1.0 - rho * rho);
            if arg < std::f64::consts::E {
                return Ok(1);
            }
            arg.ln() / (1.0 - rho)
        }
        KRegime::Orthogonal { horizon, n, delta } => {
            check_delta(delta)?;
            let denom = n as f64 * (n as f64 / delta).ln();
            if !(denom > 0.0) {
                return Err(Error::InvalidArgument("n log(n/delta) must be positive".into()));
            }
            if (horizon as f64) < denom {
                return Err(Error::InvalidArgument(format!(
                    "orthogonal regime needs T >= n log(n/delta) = {denom:.3}"
                )));
            }
            horizon as f64 / denom
        }
    };
    Ok((raw.ceil() as usize).max(1))
}
