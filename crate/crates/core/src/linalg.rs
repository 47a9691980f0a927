//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a Gram eigenvalue counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Convergence tolerance of the power iteration used for spectral norms.
pub const POWER_TOL: f64 = 1e-10;

const POWER_MAX_ITER: usize = 10_000;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `(lambda_min, lambda_max)` of the symmetric part of `m`.
pub fn eig_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let (values, _) = sym_eigen_sorted(m);
    match values.len() {
        0 => (0.0, 0.0),
        n => (values[0], values[n - 1]),
    }
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    eig_extremes(m).0
}

/// PSD tolerance `1e-10 * scale`, where scale is the largest absolute trace involved.
pub fn psd_tolerance(mats: &[&DMatrix<f64>]) -> f64 {
    let scale = mats
        .iter()
        .map(|m| m.trace().abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    1e-10 * scale
}

/// `lambda_min(sym(upper - lower))`; nonnegative (up to tolerance) iff `lower <= upper`.
pub fn loewner_margin(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> f64 {
    min_eig(&(upper - lower))
}

/// `lower ⪯ upper` in the Loewner order, with the trace-scaled tolerance.
pub fn loewner_le(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> bool {
    loewner_margin(lower, upper) >= -psd_tolerance(&[lower, upper])
}

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
/// Returns `None` when the factorization fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// `log det(numer * denom^{-1})` using a Cholesky factor `L` of `denom`:
/// the ratio's determinant equals that of `L^{-1} numer L^{-T}`.
pub fn log_det_ratio(numer: &DMatrix<f64>, denom: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(denom))?;
    let l = chol.l();
    let left = l.solve_lower_triangular(numer)?;
    let whitened = l.solve_lower_triangular(&left.transpose())?;
    log_det_spd(&whitened)
}

/// Largest generalized eigenvalue `λ_max(denom^{-1/2} numer denom^{-1/2})`, the
/// smallest `α` with `numer ⪯ α denom`. Scale-free, so it stays accurate when
/// `denom` is badly conditioned. `None` if `denom` is not positive definite.
pub fn generalized_max_eig(numer: &DMatrix<f64>, denom: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(denom))?;
    let l = chol.l();
    let left = l.solve_lower_triangular(numer)?;
    let whitened = l.solve_lower_triangular(&left.transpose())?;
    Some(eig_extremes(&symmetrize(&whitened)).1)
}

/// Spectral norm (largest singular value) via power iteration on the smaller
/// of `MᵀM` / `MMᵀ`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let top = power_iteration(&gram);
    top.max(0.0).sqrt()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn power_iteration(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let max_diag = (0..n).map(|i| g[(i, i)]).fold(0.0_f64, f64::max);
    if max_diag == 0.0 {
        return 0.0;
    }
    // Start from the heaviest column of G, then fall back to a dense vector
    // if that start happened to be orthogonal to the top eigenspace.
    let j = (0..n)
        .max_by(|&a, &b| g[(a, a)].total_cmp(&g[(b, b)]))
        .unwrap_or(0);
    let starts = [
        g.column(j).into_owned(),
        DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt().fract()),
    ];
    let mut best = 0.0_f64;
    for start in starts {
        let estimate = power_from(g, start);
        best = best.max(estimate);
        // Rayleigh quotient of a top eigenvector dominates every diagonal entry.
        if best >= max_diag * (1.0 - 1e-12) {
            break;
        }
    }
    if best < max_diag * (1.0 - 1e-12) {
        return eig_extremes(g).1;
    }
    best
}

fn power_from(g: &DMatrix<f64>, start: DVector<f64>) -> f64 {
    let norm = start.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut v = start / norm;
    let mut lambda = (v.transpose() * g * &v)[(0, 0)];
    for _ in 0..POWER_MAX_ITER {
        let w = g * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        let next = (v.transpose() * g * &v)[(0, 0)];
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Solve `gram * X = rhs` for symmetric PSD `gram`, rejecting numerically
/// singular systems (`lambda_min < SINGULAR_RTOL * lambda_max`).
pub fn solve_gram(gram: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if gram.nrows() != gram.ncols() || gram.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gram is {}x{}, rhs has {} rows",
            gram.nrows(),
            gram.ncols(),
            rhs.nrows()
        )));
    }
    let (values, vectors) = sym_eigen_sorted(gram);
    let n = values.len();
    if n == 0 {
        return Ok(DMatrix::zeros(0, rhs.ncols()));
    }
    let (lo, hi) = (values[0], values[n - 1]);
    if !(hi > 0.0) || lo < SINGULAR_RTOL * hi {
        return Err(Error::SingularGram {
            min_eig: lo,
            max_eig: hi,
        });
    }
    let mut projected = vectors.transpose() * rhs;
    for (i, mut row) in projected.row_iter_mut().enumerate() {
        row /= values[i];
    }
    Ok(&vectors * projected)
}

/// Block-diagonal matrix from square-or-rectangular blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Row-major JSON representation of a matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(with = "crate::io::f64_vec")]
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix declares {}x{} but carries {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_matches_svd() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -0.3, 0.7, 1.1, 2.0, 0.0, -1.0]);
        let svd = m.clone().svd(false, false);
        let top = svd.singular_values.max();
        assert!((spectral_norm(&m) - top).abs() < 1e-9 * top);
    }

    #[test]
    fn spectral_norm_rectangular_and_zero() {
        let m = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 0.0, 4.0]);
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn spectral_norm_orthogonal_start_falls_back() {
        // Heaviest column of the Gram is orthogonal to the top singular vector.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) * 0.5_f64.sqrt();
        let m = &m * DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.9]));
        let top = m.clone().svd(false, false).singular_values.max();
        assert!((spectral_norm(&m) - top).abs() < 1e-8);
    }

    #[test]
    fn log_det_ratio_of_scaled_identity() {
        let a = DMatrix::<f64>::identity(3, 3) * 4.0;
        let b = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!((log_det_ratio(&a, &b).unwrap() - 3.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert!(log_det_spd(&DMatrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn solve_gram_rejects_singular() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rhs = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(solve_gram(&g, &rhs), Err(Error::SingularGram { .. })));
    }

    #[test]
    fn generalized_eig_of_diagonals() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 8.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1e12, 2.0]));
        assert!((generalized_max_eig(&a, &b).unwrap() - 4.0).abs() < 1e-12);
        assert!(generalized_max_eig(&a, &DMatrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn loewner_order_basic() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(2, 2) * 2.0;
        assert!(loewner_le(&a, &b));
        assert!(!loewner_le(&b, &a));
    }
}
