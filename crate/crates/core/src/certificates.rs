//! Data-dependent confidence regions: the Gaussian confidence ellipsoid and
//! its block corollary, the self-normalized martingale radius, and the
//! single-trajectory certificate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::linalg::{
    block_diag, eig_extremes, generalized_max_eig, log_det_ratio, loewner_margin, spectral_norm,
    sym_eigen_sorted, symmetrize, MatrixJson, SINGULAR_RTOL,
};
use crate::theory::{BoundCertificate, BoundSource};

/// Eigenvector components smaller than this do not see an infinite direction.
const DIRECTION_TOL: f64 = 1e-9;

/// Relative slack on `V ⪯ α V_T`.
const ORDERING_RTOL: f64 = 1e-10;

/// `C²_{n,p,δ} = σ_w² (√(n+p) + √n + √(2 log(1/δ)))²`.
pub fn ellipsoid_scale(n_x: usize, n_u: usize, sigma_w: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let root = ((n_x + n_u) as f64).sqrt() + (n_x as f64).sqrt() + (2.0 * (1.0 / delta).ln()).sqrt();
    Ok(sigma_w * sigma_w * root * root)
}

/// Confidence ellipsoid `E Eᵀ ⪯ C² (ZᵀZ)^{-1}` with `E = (Θ̂ − Θ)ᵀ`.
///
/// The shape is stored through the eigen-decomposition of `G = ZᵀZ`; zero
/// eigenvalues (relative to `SINGULAR_RTOL`) have infinite inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidCertificate {
    pub scale_c2: f64,
    pub delta: f64,
    pub n_x: usize,
    pub n_u: usize,
    /// Eigenvalues of `ZᵀZ`, ascending; zero marks an unconstrained direction.
    pub gram_eigenvalues: DVector<f64>,
    pub gram_eigenvectors: DMatrix<f64>,
    pub infinite_directions: usize,
}

pub fn confidence_ellipsoid(z: &DMatrix<f64>, n_x: usize, sigma_w: f64, delta: f64) -> Result<EllipsoidCertificate> {
    confidence_ellipsoid_from_gram(&z.tr_mul(z), z.nrows(), n_x, sigma_w, delta)
}

/// Same as [`confidence_ellipsoid`] from a precomputed `ZᵀZ` and sample count.
pub fn confidence_ellipsoid_from_gram(
    gram: &DMatrix<f64>,
    samples: usize,
    n_x: usize,
    sigma_w: f64,
    delta: f64,
) -> Result<EllipsoidCertificate> {
    let d = gram.nrows();
    if gram.ncols() != d || n_x == 0 || n_x > d {
        return Err(Error::DimensionMismatch(format!(
            "gram is {}x{}, n_x = {n_x}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if samples < d {
        return Err(Error::TooFewSamples { needed: d, got: samples });
    }
    let n_u = d - n_x;
    let scale_c2 = ellipsoid_scale(n_x, n_u, sigma_w, delta)?;
    let (mut values, vectors) = sym_eigen_sorted(gram);
    let top = values.max().max(0.0);
    let mut infinite = 0;
    for v in values.iter_mut() {
        if !(*v > SINGULAR_RTOL * top) || top == 0.0 {
            *v = 0.0;
            infinite += 1;
        }
    }
    Ok(EllipsoidCertificate {
        scale_c2,
        delta,
        n_x,
        n_u,
        gram_eigenvalues: values,
        gram_eigenvectors: vectors,
        infinite_directions: infinite,
    })
}

impl EllipsoidCertificate {
    pub fn dim(&self) -> usize {
        self.n_x + self.n_u
    }

    /// `M = (ZᵀZ)^{-1}`. Entries touched by an infinite direction are `±inf`
    /// (diagonal entries always `+inf`).
    pub fn shape(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut finite = DMatrix::zeros(d, d);
        let mut touched = DMatrix::from_element(d, d, 0.0_f64);
        for (i, &lam) in self.gram_eigenvalues.iter().enumerate() {
            let u = self.gram_eigenvectors.column(i);
            if lam > 0.0 {
                finite += (&u * u.transpose()) / lam;
            } else {
                for r in 0..d {
                    for c in 0..d {
                        let prod = u[r] * u[c];
                        if prod.abs() > DIRECTION_TOL * DIRECTION_TOL {
                            touched[(r, c)] += prod;
                        }
                    }
                }
            }
        }
        let mut out = symmetrize(&finite);
        for r in 0..d {
            for c in 0..d {
                let t = touched[(r, c)];
                if r == c && t > 0.0 {
                    out[(r, c)] = f64::INFINITY;
                } else if t != 0.0 {
                    out[(r, c)] = f64::INFINITY.copysign(t);
                }
            }
        }
        out
    }

    /// `C ‖Q M Qᵀ‖₂^{1/2}` for the coordinate block `[start, start+len)`;
    /// infinite when an unconstrained direction reaches the block.
    fn block_bound(&self, start: usize, len: usize) -> f64 {
        let mut block = DMatrix::zeros(len, len);
        for (i, &lam) in self.gram_eigenvalues.iter().enumerate() {
            let u = self.gram_eigenvectors.view((start, i), (len, 1)).into_owned();
            if lam > 0.0 {
                block += (&u * u.transpose()) / lam;
            } else if u.norm() > DIRECTION_TOL {
                return f64::INFINITY;
            }
        }
        let (_, hi) = eig_extremes(&block);
        self.scale_c2.sqrt() * hi.max(0.0).sqrt()
    }

    /// `(ε_A, ε_B)` from the row-selector blocks `[I 0]` and `[0 I]`;
    /// `ε_B` is `None` without inputs.
    pub fn block_spectral_bounds(&self) -> (f64, Option<f64>) {
        let eps_a = self.block_bound(0, self.n_x);
        let eps_b = (self.n_u > 0).then(|| self.block_bound(self.n_x, self.n_u));
        (eps_a, eps_b)
    }

    /// `C ‖M‖₂^{1/2}`, the bound on the full `‖Θ̂ − Θ‖₂`.
    pub fn full_bound(&self) -> f64 {
        self.block_bound(0, self.dim())
    }

    /// Whether `E Eᵀ ⪯ C² M` for the error `Θ̂ − Θ` (`n_x × (n_x+n_u)`).
    ///
    /// Checked as `G^{1/2} E Eᵀ G^{1/2} ⪯ C² I`, which is equivalent and
    /// stays finite along unconstrained directions.
    pub fn contains(&self, theta_error: &DMatrix<f64>) -> Result<bool> {
        Ok(self.containment_margin(theta_error)? >= -1e-10 * self.scale_c2.max(f64::MIN_POSITIVE))
    }

    /// `C² − λ_max(G^{1/2} E Eᵀ G^{1/2})`.
    pub fn containment_margin(&self, theta_error: &DMatrix<f64>) -> Result<f64> {
        if theta_error.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "error has {} columns, certificate dimension is {}",
                theta_error.ncols(),
                self.dim()
            )));
        }
        let sqrt_vals = self.gram_eigenvalues.map(|v| v.max(0.0).sqrt());
        let u = &self.gram_eigenvectors;
        // G^{1/2} E with E = theta_errorᵀ
        let mut projected = u.transpose() * theta_error.transpose();
        for (i, mut row) in projected.row_iter_mut().enumerate() {
            row *= sqrt_vals[i];
        }
        let s = spectral_norm(&projected);
        Ok(self.scale_c2 - s * s)
    }

    pub fn to_json(&self) -> EllipsoidJson {
        let (eps_a, eps_b) = self.block_spectral_bounds();
        EllipsoidJson {
            scale_c2: self.scale_c2,
            delta: self.delta,
            n_x: self.n_x,
            n_u: self.n_u,
            shape: MatrixJson::from(&self.shape()),
            infinite_directions: self.infinite_directions,
            eps_a,
            eps_b,
        }
    }

    pub fn certificate_a(&self) -> BoundCertificate {
        BoundCertificate::new(self.block_spectral_bounds().0, self.delta, BoundSource::EllipsoidA)
    }

    pub fn certificate_b(&self) -> Option<BoundCertificate> {
        self.block_spectral_bounds()
            .1
            .map(|v| BoundCertificate::new(v, self.delta, BoundSource::EllipsoidB))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidJson {
    pub scale_c2: f64,
    pub delta: f64,
    pub n_x: usize,
    pub n_u: usize,
    pub shape: MatrixJson,
    pub infinite_directions: usize,
    #[serde(with = "crate::io::f64_ext")]
    pub eps_a: f64,
    #[serde(with = "crate::io::f64_opt", skip_serializing_if = "Option::is_none", default)]
    pub eps_b: Option<f64>,
}

/// `2R² log(det(V̄)^{1/2} det(V)^{-1/2} / δ)`.
pub fn snm_radius(v: &DMatrix<f64>, v_bar: &DMatrix<f64>, r2: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let log_det = log_det_ratio(v_bar, v).ok_or(Error::SingularRegularizer)?;
    Ok(2.0 * r2 * (0.5 * log_det + (1.0 / delta).ln()))
}

/// Running state of a self-normalized vector martingale `S_t = Σ z_s η_sᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnmState {
    pub v: DMatrix<f64>,
    pub v_t: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r2: f64,
    pub steps: usize,
}

impl SnmState {
    /// `v` must be positive definite; `noise_dim` is the width of `η_t`.
    pub fn new(v: DMatrix<f64>, noise_dim: usize, r2: f64) -> Result<Self> {
        let d = v.nrows();
        if v.ncols() != d {
            return Err(Error::DimensionMismatch("regularizer must be square".into()));
        }
        if nalgebra::Cholesky::new(symmetrize(&v)).is_none() {
            return Err(Error::SingularRegularizer);
        }
        Ok(Self {
            v,
            v_t: DMatrix::zeros(d, d),
            s: DMatrix::zeros(d, noise_dim),
            r2,
            steps: 0,
        })
    }

    pub fn push(&mut self, z: &DVector<f64>, eta: &DVector<f64>) {
        self.v_t += z * z.transpose();
        self.s += z * eta.transpose();
        self.steps += 1;
    }

    pub fn v_bar(&self) -> DMatrix<f64> {
        &self.v + &self.v_t
    }

    /// `‖V̄^{-1/2} S‖₂²`.
    pub fn lhs(&self) -> f64 {
        let chol = nalgebra::Cholesky::new(symmetrize(&self.v_bar())).expect("V + V_T is positive definite");
        let whitened = chol.l().solve_lower_triangular(&self.s).expect("triangular factor is invertible");
        let n = spectral_norm(&whitened);
        n * n
    }

    pub fn radius(&self, delta: f64) -> Result<f64> {
        snm_radius(&self.v, &self.v_bar(), self.r2, delta)
    }
}

/// Which `B` built the regularizer `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSource {
    Estimated,
    True,
    /// Autonomous fit, no input block.
    None,
}

#[derive(Debug, Clone)]
pub struct SingleTrajInputs<'a> {
    /// `V_T = Σ z_t z_tᵀ`.
    pub gram: &'a DMatrix<f64>,
    /// Number of transitions `T`.
    pub samples: usize,
    pub n_x: usize,
    /// `n_x × n_u` (zero columns for an autonomous fit).
    pub b: &'a DMatrix<f64>,
    pub b_source: BSource,
    pub sigma_u: f64,
    pub sigma_w: f64,
    pub alpha: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTrajCertificate {
    pub bound: BoundCertificate,
    pub alpha: f64,
    /// `λ_min(α V_T − V)`; nonnegative when the ordering holds.
    pub ordering_margin: f64,
    /// Smallest `α` satisfying the ordering, `λ_max(V_T^{-1/2} V V_T^{-1/2})`.
    pub required_alpha: f64,
    pub lambda_min_vt: f64,
    pub log_det_ratio: f64,
    pub b_source: BSource,
}

/// `√(8(1+α)) σ_w √((n_x log(9/δ) + ½ log det(V_T V^{-1})) / λ_min(V_T))`.
pub fn single_traj_bound_value(
    lambda_min_vt: f64,
    log_det_ratio: f64,
    n_x: usize,
    sigma_w: f64,
    alpha: f64,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    if !(lambda_min_vt > 0.0) {
        return Err(Error::SingularGram {
            min_eig: lambda_min_vt,
            max_eig: f64::NAN,
        });
    }
    let numer = n_x as f64 * (9.0 / delta).ln() + 0.5 * log_det_ratio;
    Ok((8.0 * (1.0 + alpha)).sqrt() * sigma_w * (numer.max(0.0) / lambda_min_vt).sqrt())
}

/// `V = T · blkdiag(B Bᵀ σ_u² + σ_w² I, σ_u² I)`.
pub fn single_traj_regularizer(b: &DMatrix<f64>, samples: usize, sigma_u: f64, sigma_w: f64) -> DMatrix<f64> {
    let n_x = b.nrows();
    let n_u = b.ncols();
    let state = b * b.transpose() * (sigma_u * sigma_u) + DMatrix::identity(n_x, n_x) * (sigma_w * sigma_w);
    let input = DMatrix::identity(n_u, n_u) * (sigma_u * sigma_u);
    block_diag(&[&state, &input]) * samples as f64
}

/// Certificate for `‖Θ̂ − Θ‖₂` from one trajectory, valid when `V ⪯ α V_T`.
pub fn single_traj_cert(inp: &SingleTrajInputs<'_>) -> Result<SingleTrajCertificate> {
    let d = inp.gram.nrows();
    if inp.b.nrows() != inp.n_x || inp.n_x + inp.b.ncols() != d || inp.gram.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "gram is {}x{}, B is {}x{}, n_x = {}",
            inp.gram.nrows(),
            inp.gram.ncols(),
            inp.b.nrows(),
            inp.b.ncols(),
            inp.n_x
        )));
    }
    check_delta(inp.delta)?;
    if !(inp.alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {} must be positive", inp.alpha)));
    }
    let (lo, hi) = eig_extremes(inp.gram);
    if !(hi > 0.0) || lo < SINGULAR_RTOL * hi {
        return Err(Error::SingularGram { min_eig: lo, max_eig: hi });
    }
    let v = single_traj_regularizer(inp.b, inp.samples, inp.sigma_u, inp.sigma_w);
    let scaled = inp.gram * inp.alpha;
    let margin = loewner_margin(&v, &scaled);
    // decide on the scale-free ratio: V_T's trace can exceed its smallest
    // eigenvalue by many orders of magnitude, swamping any absolute tolerance
    let required_alpha = generalized_max_eig(&v, inp.gram).ok_or(Error::SingularGram { min_eig: lo, max_eig: hi })?;
    if required_alpha > inp.alpha * (1.0 + ORDERING_RTOL) {
        return Err(Error::OrderingViolated { margin });
    }
    let log_det = log_det_ratio(inp.gram, &v).ok_or(Error::SingularRegularizer)?;
    let value = single_traj_bound_value(lo, log_det, inp.n_x, inp.sigma_w, inp.alpha, inp.delta)?;
    Ok(SingleTrajCertificate {
        bound: BoundCertificate::new(value, inp.delta, BoundSource::SingleTrajectory),
        alpha: inp.alpha,
        ordering_margin: margin,
        required_alpha,
        lambda_min_vt: lo,
        log_det_ratio: log_det,
        b_source: inp.b_source,
    })
}

/// First `α` of `alphas` (in order) whose ordering condition holds.
pub fn single_traj_cert_sweep(inp: &SingleTrajInputs<'_>, alphas: &[f64]) -> Result<SingleTrajCertificate> {
    let mut last = Error::InvalidArgument("empty alpha sweep".into());
    for &alpha in alphas {
        match single_traj_cert(&SingleTrajInputs { alpha, ..inp.clone() }) {
            Ok(c) => return Ok(c),
            Err(e @ Error::OrderingViolated { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scale_example() {
        let c2 = ellipsoid_scale(2, 1, 0.1, 0.05).unwrap();
        assert!((c2 - 0.312_929_613_126_932_24).abs() < 1e-12);
    }

    #[test]
    fn identity_and_diagonal_blocks() {
        let cert = confidence_ellipsoid_from_gram(&DMatrix::identity(3, 3), 10, 2, 1.0, 0.05).unwrap();
        let unit = EllipsoidCertificate { scale_c2: 1.0, ..cert };
        assert_eq!(unit.block_spectral_bounds(), (1.0, Some(1.0)));

        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 4.0, 9.0]));
        let cert = confidence_ellipsoid_from_gram(&g, 10, 2, 1.0, 0.05).unwrap();
        let unit = EllipsoidCertificate { scale_c2: 1.0, ..cert };
        let (a, b) = unit.block_spectral_bounds();
        assert!((a - 0.5).abs() < 1e-12);
        assert!((b.unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let c = 2.5;
        let scaled = confidence_ellipsoid_from_gram(&(DMatrix::identity(3, 3) * c), 10, 2, 1.0, 0.05).unwrap();
        let shape = scaled.shape();
        assert!((shape - DMatrix::identity(3, 3) / c).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_shape_is_infinite() {
        // second covariate duplicates the first
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0, 0.5, 0.5]);
        let cert = confidence_ellipsoid(&z, 1, 1.0, 0.1).unwrap();
        assert_eq!(cert.infinite_directions, 1);
        let shape = cert.shape();
        assert_eq!(shape[(0, 0)], f64::INFINITY);
        assert_eq!(shape[(1, 1)], f64::INFINITY);
        let (a, b) = cert.block_spectral_bounds();
        assert!(a.is_infinite() && b.unwrap().is_infinite());
        let json = crate::io::to_json_pretty(&cert.to_json()).unwrap();
        assert!(json.contains("\"inf\""));
    }

    #[test]
    fn too_few_samples() {
        let z = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(
            confidence_ellipsoid(&z, 2, 1.0, 0.1).unwrap_err(),
            Error::TooFewSamples { needed: 3, got: 2 }
        );
    }

    #[test]
    fn containment_matches_direct_psd_check() {
        let g = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 2.0]);
        let cert = confidence_ellipsoid_from_gram(&g, 10, 1, 1.0, 0.1).unwrap();
        let m = g.clone().try_inverse().unwrap();
        for e in [[0.1, 0.2], [1.0, -0.5], [0.3, 1.4], [-0.9, 0.2]] {
            let err = DMatrix::from_row_slice(1, 2, &e);
            let eet = err.transpose() * &err;
            let direct = min_eig_of(&(&m * cert.scale_c2 - eet)) >= -1e-12;
            assert_eq!(cert.contains(&err).unwrap(), direct);
        }
    }

    fn min_eig_of(m: &DMatrix<f64>) -> f64 {
        eig_extremes(m).0
    }

    #[test]
    fn snm_examples() {
        let v = DMatrix::identity(2, 2);
        assert_eq!(snm_radius(&v, &v, 1.0, 1.0).unwrap(), 0.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let four = DMatrix::from_element(1, 1, 4.0);
        let r = snm_radius(&one, &four, 1.0, 0.1).unwrap();
        assert!((r - 2.0 * 20.0_f64.ln()).abs() < 1e-12);
        let zero = DMatrix::zeros(1, 1);
        assert_eq!(snm_radius(&zero, &four, 1.0, 0.1), Err(Error::SingularRegularizer));
        assert_eq!(SnmState::new(zero, 1, 1.0).unwrap_err(), Error::SingularRegularizer);
    }

    #[test]
    fn snm_state_tracks_sums() {
        let mut st = SnmState::new(DMatrix::identity(1, 1), 1, 1.0).unwrap();
        st.push(&DVector::from_vec(vec![2.0]), &DVector::from_vec(vec![3.0]));
        // V̄ = 5, S = 6
        assert!((st.lhs() - 36.0 / 5.0).abs() < 1e-12);
        assert!((st.radius(0.1).unwrap() - (5.0_f64.ln() + 2.0 * 10.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn single_traj_examples() {
        let v = single_traj_bound_value(100.0, 2.0, 2, 1.0, 1.0, 0.05).unwrap();
        assert!((v - 1.349_720_783_082_511).abs() < 1e-9);

        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let v = single_traj_regularizer(&b, 10, 1.0, 0.5);
        let cert = single_traj_cert(&SingleTrajInputs {
            gram: &v,
            samples: 10,
            n_x: 2,
            b: &b,
            b_source: BSource::True,
            sigma_u: 1.0,
            sigma_w: 0.5,
            alpha: 1.0,
            delta: 0.05,
        })
        .unwrap();
        assert!(cert.log_det_ratio.abs() < 1e-12);
        let lam = eig_extremes(&v).0;
        let expect = 4.0 * 0.5 * (2.0 * 180.0_f64.ln() / lam).sqrt();
        assert!((cert.bound.value - expect).abs() < 1e-12);
    }

    #[test]
    fn ordering_violation_and_sweep() {
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let v = single_traj_regularizer(&b, 10, 1.0, 1.0);
        let gram = &v * 0.4;
        let inp = SingleTrajInputs {
            gram: &gram,
            samples: 10,
            n_x: 1,
            b: &b,
            b_source: BSource::Estimated,
            sigma_u: 1.0,
            sigma_w: 1.0,
            alpha: 1.0,
            delta: 0.1,
        };
        assert!(matches!(single_traj_cert(&inp), Err(Error::OrderingViolated { .. })));
        let swept = single_traj_cert_sweep(&inp, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(swept.alpha, 4.0);
        assert!(matches!(
            single_traj_cert_sweep(&inp, &[1.0, 2.0]),
            Err(Error::OrderingViolated { .. })
        ));
    }

    #[test]
    fn ordering_is_checked_relative_to_each_direction() {
        // V = diag(100, 100); V_T huge along one axis, 0.1% short along the other
        let b = DMatrix::zeros(1, 1);
        let gram = DMatrix::from_diagonal(&DVector::from_vec(vec![1e13, 99.9]));
        let inp = SingleTrajInputs {
            gram: &gram,
            samples: 100,
            n_x: 1,
            b: &b,
            b_source: BSource::True,
            sigma_u: 1.0,
            sigma_w: 1.0,
            alpha: 1.0,
            delta: 0.1,
        };
        assert!(matches!(single_traj_cert(&inp), Err(Error::OrderingViolated { .. })));
        let ok = single_traj_cert(&SingleTrajInputs { alpha: 1.002, ..inp }).unwrap();
        assert!((ok.required_alpha - 100.0 / 99.9).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn block_never_exceeds_full(vals in proptest::collection::vec(-3.0f64..3.0, 12)) {
            let z = DMatrix::from_row_slice(4, 3, &vals);
            let cert = confidence_ellipsoid(&z, 2, 1.0, 0.1).unwrap();
            let full = cert.full_bound();
            let (a, b) = cert.block_spectral_bounds();
            if full.is_finite() {
                prop_assert!(a <= full * (1.0 + 1e-9));
                prop_assert!(b.unwrap() <= full * (1.0 + 1e-9));
            }
        }

        #[test]
        fn snm_radius_grows_with_data(zs in proptest::collection::vec(-2.0f64..2.0, 2..20)) {
            let mut st = SnmState::new(DMatrix::identity(1, 1), 1, 1.0).unwrap();
            let mut prev = st.radius(0.1).unwrap();
            for z in zs {
                st.push(&DVector::from_vec(vec![z]), &DVector::from_vec(vec![0.0]));
                let r = st.radius(0.1).unwrap();
                prop_assert!(r >= prev - 1e-12);
                prev = r;
            }
        }

        #[test]
        fn alpha_scaling_is_sqrt(alpha in 0.1f64..10.0, lam in 1.0f64..1e4, ld in 0.0f64..10.0) {
            let a = single_traj_bound_value(lam, ld, 2, 0.3, alpha, 0.05).unwrap();
            let b = single_traj_bound_value(lam, ld, 2, 0.3, 2.0 * (1.0 + alpha) - 1.0, 0.05).unwrap();
            prop_assert!((b - a * 2.0_f64.sqrt()).abs() <= 1e-12 * b);
        }
    }
}
