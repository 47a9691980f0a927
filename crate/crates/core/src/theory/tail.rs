//! Tail-bound calculus: sub-Gaussian / sub-exponential parameters, Hoeffding
//! inversion, the sub-exponential tail, a numerical Chernoff bound and the
//! closed-form MGFs of `X² − 1` and `XW` for independent standard normals.

use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};

/// Concentration parameters of a centered random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailParams {
    /// `E e^{λ(X−EX)} ≤ exp(λ²σ²/2)` for all λ.
    SubGaussian { sigma2: f64 },
    /// `E e^{λ(X−EX)} ≤ exp(λ²ν²/2)` for `|λ| ≤ 1/α`.
    SubExponential { nu2: f64, alpha: f64 },
}

impl TailParams {
    pub fn sub_gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::NonPositiveValue(sigma2));
        }
        Ok(TailParams::SubGaussian { sigma2 })
    }

    pub fn sub_exponential(nu2: f64, alpha: f64) -> Result<Self> {
        if !(nu2 > 0.0 && nu2.is_finite()) {
            return Err(Error::NonPositiveValue(nu2));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::NonPositiveValue(alpha));
        }
        Ok(TailParams::SubExponential { nu2, alpha })
    }

    /// `X² − 1` for `X ~ N(0,1)`: sub-exponential with `(4, 4)`.
    pub fn centered_chi_square() -> Self {
        TailParams::SubExponential { nu2: 4.0, alpha: 4.0 }
    }

    /// `XW` for independent standard normals: sub-exponential with `(2, √2)`.
    pub fn gaussian_product() -> Self {
        TailParams::SubExponential {
            nu2: 2.0,
            alpha: std::f64::consts::SQRT_2,
        }
    }

    /// Parameters of the sum of two independent variables: variance proxies
    /// add, `α` takes the max. A sub-Gaussian term acts as `(σ², 0)`.
    pub fn add(self, other: TailParams) -> TailParams {
        use TailParams::*;
        match (self, other) {
            (SubGaussian { sigma2: a }, SubGaussian { sigma2: b }) => SubGaussian { sigma2: a + b },
            (SubGaussian { sigma2 }, SubExponential { nu2, alpha })
            | (SubExponential { nu2, alpha }, SubGaussian { sigma2 }) => SubExponential {
                nu2: nu2 + sigma2,
                alpha,
            },
            (SubExponential { nu2: n1, alpha: a1 }, SubExponential { nu2: n2, alpha: a2 }) => {
                SubExponential {
                    nu2: n1 + n2,
                    alpha: a1.max(a2),
                }
            }
        }
    }

    /// Parameters of a sum of `n` i.i.d. copies.
    pub fn sum_iid(self, n: usize) -> TailParams {
        let n = n as f64;
        match self {
            TailParams::SubGaussian { sigma2 } => TailParams::SubGaussian { sigma2: sigma2 * n },
            TailParams::SubExponential { nu2, alpha } => TailParams::SubExponential { nu2: nu2 * n, alpha },
        }
    }

    /// Parameters of `c·X`.
    pub fn scale(self, c: f64) -> TailParams {
        match self {
            TailParams::SubGaussian { sigma2 } => TailParams::SubGaussian { sigma2: sigma2 * c * c },
            TailParams::SubExponential { nu2, alpha } => TailParams::SubExponential {
                nu2: nu2 * c * c,
                alpha: alpha * c.abs(),
            },
        }
    }

    /// Upper bound on `P(X − EX ≥ t)`.
    pub fn upper_tail(&self, t: f64) -> Result<f64> {
        match *self {
            TailParams::SubGaussian { sigma2 } => {
                if t < 0.0 {
                    return Err(Error::NegativeDeviation(t));
                }
                Ok((-t * t / (2.0 * sigma2)).exp())
            }
            TailParams::SubExponential { nu2, alpha } => subexp_tail(nu2, alpha, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    One,
    Two,
}

/// Deviation radius of the empirical mean of `n` i.i.d. σ²-sub-Gaussian
/// variables at failure probability `delta`: `√(2σ² log(1/δ)/N)`.
///
/// The two-sided version union-bounds both tails, so it is evaluated at `δ/2`
/// to hold with probability `1 − δ`.
pub fn hoeffding_radius(sigma2: f64, n: usize, delta: f64, sides: Sides) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let effective = match sides {
        Sides::One => delta,
        Sides::Two => delta / 2.0,
    };
    Ok((2.0 * sigma2 * (1.0 / effective).ln() / n as f64).sqrt())
}

/// Variance proxy `(b − a)²/4` of a variable bounded in `[a, b]`.
pub fn bounded_variance_proxy(lo: f64, hi: f64) -> f64 {
    (hi - lo).powi(2) / 4.0
}

/// Hoeffding for bounded variables: `P(mean − EX ≥ t) ≤ exp(−2Nt²/(b−a)²)`.
pub fn hoeffding_bounded_tail(n: usize, t: f64, lo: f64, hi: f64) -> f64 {
    (-2.0 * n as f64 * t * t / (hi - lo).powi(2)).exp()
}

/// Two-sided radius for an empirical probability `P̂_N` (indicators in `{0,1}`):
/// `|P̂_N − P| ≤ √(log(2/δ)/(2N))` with probability `1 − δ`.
pub fn probability_estimation_radius(n: usize, delta: f64) -> Result<f64> {
    hoeffding_radius(bounded_variance_proxy(0.0, 1.0), n, delta, Sides::Two)
}

/// Sub-exponential tail: `exp(−t²/2ν²)` for `t ≤ ν²/α`, else `exp(−t/2α)`.
pub fn subexp_tail(nu2: f64, alpha: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeDeviation(t));
    }
    if t <= nu2 / alpha {
        Ok((-t * t / (2.0 * nu2)).exp())
    } else {
        Ok((-t / (2.0 * alpha)).exp())
    }
}

const CHERNOFF_GRID: usize = 2048;

/// Numerical Chernoff bound `exp(inf_{λ∈[0,b]} [log E e^{λ(X−EX)} − λt])`.
///
/// A dense grid locates the basin, golden-section search refines it. The
/// returned value is the smallest objective actually probed, capped at 1.
pub fn chernoff_numeric<F: Fn(f64) -> f64>(log_mgf: F, t: f64, b: f64) -> f64 {
    if !(b > 0.0) {
        return 1.0;
    }
    let objective = |lam: f64| {
        let v = log_mgf(lam) - lam * t;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = b / CHERNOFF_GRID as f64;
    let mut best = (0.0, objective(0.0).min(0.0));
    let mut best_idx = 0;
    for i in 1..=CHERNOFF_GRID {
        let lam = step * i as f64;
        let v = objective(lam);
        if v < best.1 {
            best = (lam, v);
            best_idx = i;
        }
    }
    let mut lo = step * best_idx.saturating_sub(1) as f64;
    let mut hi = (step * (best_idx + 1) as f64).min(b);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..80 {
        if fc.min(fd) < best.1 {
            best = if fc < fd { (c, fc) } else { (d, fd) };
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
        if hi - lo < 1e-14 * b.max(1.0) {
            break;
        }
    }
    best.1 = best.1.min(fc).min(fd);
    best.1.min(0.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MgfKind {
    /// `X² − 1`, `X ~ N(0,1)`; finite for `λ < 1/2`.
    ChiSqCentered,
    /// `XW`, `X, W` i.i.d. `N(0,1)`; finite for `|λ| < 1`.
    GaussProduct,
}

impl MgfKind {
    pub fn in_domain(self, lambda: f64) -> bool {
        match self {
            MgfKind::ChiSqCentered => lambda < 0.5,
            MgfKind::GaussProduct => lambda.abs() < 1.0,
        }
    }

    pub(crate) fn domain_str(self) -> &'static str {
        match self {
            MgfKind::ChiSqCentered => "lambda < 1/2",
            MgfKind::GaussProduct => "|lambda| < 1",
        }
    }

    fn check(self, lambda: f64) -> Result<()> {
        if self.in_domain(lambda) {
            Ok(())
        } else {
            Err(Error::DomainExceeded {
                lambda,
                domain: self.domain_str(),
            })
        }
    }
}

/// Closed-form MGFs: `E e^{λ(X²−1)} = e^{−λ}(1−2λ)^{−1/2}` and
/// `E e^{λXW} = (1−λ²)^{−1/2}`.
///
/// Note: these are the normalized forms (both equal 1 at λ = 0). The
/// frequently quoted `e^{−λ}/(1−2λ)` and `1/√(π(1−λ²))` are not MGFs.
pub fn mgf_closed_form(kind: MgfKind, lambda: f64) -> Result<f64> {
    Ok(log_mgf_closed_form(kind, lambda)?.exp())
}

/// Logarithm of [`mgf_closed_form`], accurate near λ = 0.
pub fn log_mgf_closed_form(kind: MgfKind, lambda: f64) -> Result<f64> {
    kind.check(lambda)?;
    Ok(match kind {
        MgfKind::ChiSqCentered => -lambda - 0.5 * (-2.0 * lambda).ln_1p(),
        MgfKind::GaussProduct => -0.5 * (-lambda * lambda).ln_1p(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub pass: bool,
    /// `min_λ [exp(ν²λ²/2) − MGF(λ)]` over the grid.
    pub min_slack: f64,
    pub worst_lambda: f64,
}

/// Check `MGF(λ) ≤ exp(ν²λ²/2)` pointwise on `grid`, which must lie inside
/// `|λ| < 1/α`.
pub fn subexp_domination_check(kind: MgfKind, nu2: f64, alpha: f64, grid: &[f64]) -> Result<DominationReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let mut report = DominationReport {
        pass: true,
        min_slack: f64::INFINITY,
        worst_lambda: f64::NAN,
    };
    for &lam in grid {
        if lam.abs() >= 1.0 / alpha {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lam} lies outside |lambda| < 1/alpha = {}",
                1.0 / alpha
            )));
        }
        let slack = (nu2 * lam * lam / 2.0).exp() - mgf_closed_form(kind, lam)?;
        if slack < report.min_slack {
            report.min_slack = slack;
            report.worst_lambda = lam;
        }
    }
    report.pass = report.min_slack >= 0.0;
    Ok(report)
}

/// `n` cell midpoints of `(lo, hi)`; never touches the endpoints.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_radius(1.0, 100, 1.0, Sides::One).unwrap(), 0.0);
        let r = hoeffding_radius(1.0, 100, 0.05, Sides::One).unwrap();
        assert!((r - 0.244_774_683_068_081_65).abs() < 1e-12);
        let two = hoeffding_radius(1.0, 100, 0.05, Sides::Two).unwrap();
        assert!((two - hoeffding_radius(1.0, 100, 0.025, Sides::One).unwrap()).abs() < 1e-15);
        assert!(matches!(hoeffding_radius(1.0, 10, 0.0, Sides::One), Err(Error::InvalidDelta(_))));
        assert!(matches!(hoeffding_radius(1.0, 10, 1.5, Sides::One), Err(Error::InvalidDelta(_))));
    }

    #[test]
    fn bounded_hoeffding_inverts_consistently() {
        // sigma2 = (b-a)²/4 turns exp(-N t²/2σ²) into exp(-2Nt²/(b-a)²).
        let (lo, hi, n, delta) = (-1.0, 3.0, 50, 0.01);
        let r = hoeffding_radius(bounded_variance_proxy(lo, hi), n, delta, Sides::One).unwrap();
        assert!((hoeffding_bounded_tail(n, r, lo, hi) - delta).abs() < 1e-14);
        let p = probability_estimation_radius(200, 0.1).unwrap();
        assert!((2.0 * (-2.0 * 200.0 * p * p).exp() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn subexp_tail_examples() {
        assert_eq!(subexp_tail(4.0, 4.0, 0.0).unwrap(), 1.0);
        assert!((subexp_tail(4.0, 4.0, 0.5).unwrap() - 0.969_233_234_476_344).abs() < 1e-12);
        assert!((subexp_tail(4.0, 4.0, 2.0).unwrap() - 0.778_800_783_071_404_9).abs() < 1e-12);
        assert!(matches!(subexp_tail(4.0, 4.0, -1.0), Err(Error::NegativeDeviation(_))));
    }

    #[test]
    fn subexp_tail_continuous_at_switch() {
        for &(nu2, alpha) in &[(4.0, 4.0), (2.0, std::f64::consts::SQRT_2), (1.0, 0.1)] {
            let t = nu2 / alpha;
            let joint = (-nu2 / (2.0 * alpha * alpha)).exp();
            let left = subexp_tail(nu2, alpha, t).unwrap();
            let right = subexp_tail(nu2, alpha, t * (1.0 + 1e-12)).unwrap();
            assert!((left - joint).abs() < 1e-12 && (right - joint).abs() < 1e-9);
        }
    }

    #[test]
    fn closure_laws() {
        let a = TailParams::sub_gaussian(1.0).unwrap();
        let b = TailParams::sub_gaussian(2.5).unwrap();
        assert_eq!(a.add(b), TailParams::SubGaussian { sigma2: 3.5 });
        let c = TailParams::sub_exponential(4.0, 4.0).unwrap();
        let d = TailParams::gaussian_product();
        assert_eq!(
            c.add(d),
            TailParams::SubExponential { nu2: 6.0, alpha: 4.0 }
        );
        assert_eq!(a.add(c), TailParams::SubExponential { nu2: 5.0, alpha: 4.0 });
        assert_eq!(
            TailParams::centered_chi_square().sum_iid(10),
            TailParams::SubExponential { nu2: 40.0, alpha: 4.0 }
        );
        assert!(TailParams::sub_gaussian(0.0).is_err());
    }

    #[test]
    fn chernoff_gaussian_matches_closed_form() {
        for &sigma in &[0.5, 1.0, 2.0] {
            for &t in &[0.5, 1.0, 2.0] {
                let s2: f64 = sigma * sigma;
                let got = chernoff_numeric(|l| l * l * s2 / 2.0, t, 50.0);
                let want = (-t * t / (2.0 * s2)).exp();
                assert!((got - want).abs() < 1e-6, "sigma={sigma} t={t}: {got} vs {want}");
            }
        }
        assert_eq!(chernoff_numeric(|l| l * l / 2.0, 0.0, 10.0), 1.0);
    }

    #[test]
    fn chernoff_chi_square_matches_brute_force_grid() {
        let log_mgf = |l: f64| log_mgf_closed_form(MgfKind::ChiSqCentered, l).unwrap();
        let got = chernoff_numeric(log_mgf, 1.0, 0.49);
        // Independent oracle: 2·10^6-point grid.
        let n = 2_000_000;
        let brute = (0..=n)
            .map(|i| {
                let l = 0.49 * i as f64 / n as f64;
                log_mgf(l) - l
            })
            .fold(f64::INFINITY, f64::min)
            .exp();
        assert!((got - brute).abs() < 1e-6, "{got} vs {brute}");
        assert!(got <= brute + 1e-12);
    }

    #[test]
    fn mgf_examples() {
        for kind in [MgfKind::ChiSqCentered, MgfKind::GaussProduct] {
            assert_eq!(mgf_closed_form(kind, 0.0).unwrap(), 1.0);
        }
        // Values from an independent high-precision quadrature.
        assert!((mgf_closed_form(MgfKind::ChiSqCentered, 0.2).unwrap() - 1.056_976_857_232_960_2).abs() < 1e-12);
        assert!((mgf_closed_form(MgfKind::GaussProduct, 0.5).unwrap() - 1.154_700_538_379_251_5).abs() < 1e-12);
        assert!(matches!(
            mgf_closed_form(MgfKind::ChiSqCentered, 0.5),
            Err(Error::DomainExceeded { .. })
        ));
        assert!(mgf_closed_form(MgfKind::GaussProduct, -1.0).is_err());
    }

    #[test]
    fn domination_checks() {
        let chi = subexp_domination_check(MgfKind::ChiSqCentered, 4.0, 4.0, &interior_grid(-0.25, 0.25, 1000)).unwrap();
        assert!(chi.pass && chi.min_slack > 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let prod =
            subexp_domination_check(MgfKind::GaussProduct, 2.0, std::f64::consts::SQRT_2, &interior_grid(-r, r, 1000))
                .unwrap();
        assert!(prod.pass && prod.min_slack > 0.0);
        let bad =
            subexp_domination_check(MgfKind::GaussProduct, 0.5, std::f64::consts::SQRT_2, &interior_grid(-r, r, 1000))
                .unwrap();
        assert!(!bad.pass && bad.min_slack < 0.0);
        assert!(subexp_domination_check(MgfKind::GaussProduct, 2.0, 2.0, &[0.6]).is_err());
    }
}
