//! Dense linear-algebra kernels shared by the game engine.
//!
//! Everything operates on symmetric matrices of modest dimension (the number
//! of prediction-function components), so eigendecomposition-based routines
//! are used throughout: pseudoinverse, PSD square roots, numerical rank.

use alloc::{format, vec::Vec};
use nalgebra::{DMatrix, DVector};

use crate::fmath::{abs, sqrt};
use crate::{Error, Result};

/// Relative eigenvalue threshold for numerical rank of moment matrices.
pub const RANK_EIG_TOL: f64 = 1e-8;
/// Relative singular-value threshold for pseudoinverses.
pub const PINV_TOL: f64 = 1e-10;
/// Absolute tolerance for symmetry checks.
pub const SYM_TOL: f64 = 1e-10;
/// Relative tolerance for PSD checks (negative eigenvalue slack).
pub const PSD_TOL: f64 = 1e-8;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &x| acc.max(abs(x)))
}

/// Errors unless `max |M - M'| <= tol`.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max(abs(m[(i, j)] - m[(j, i)]));
        }
    }
    if worst > tol {
        return Err(Error::InvalidMatrix(format!(
            "matrix is not symmetric: max |M - M'| = {worst:e} > {tol:e}"
        )));
    }
    Ok(())
}

/// Exact symmetrization `(M + M') / 2`; applied before eigendecompositions.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending; returns (eigenvalues, eigenvector columns in matching order).
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Errors unless the symmetric matrix has min eigenvalue `>= -tol * max|eig|`.
pub fn check_psd(m: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    check_symmetric(m, SYM_TOL)?;
    let (vals, _) = sym_eigen_desc(m);
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(abs(v)));
    let min = vals[vals.len() - 1];
    if min < -rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidMatrix(format!(
            "matrix is not PSD: min eigenvalue {min:e} with scale {scale:e}"
        )));
    }
    Ok(())
}

/// Numerical rank of a symmetric PSD matrix: eigenvalues above
/// `rel_tol * largest eigenvalue` count.
pub fn psd_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (vals, _) = sym_eigen_desc(m);
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(abs(v)));
    if scale == 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > rel_tol * scale).count()
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix; eigenvalues below
/// `rel_tol * largest` are treated as zero.
pub fn pinv_psd(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(m);
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(abs(v)));
    let n = vals.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let v = vals[j];
        if v > rel_tol * scale {
            let col = vecs.column(j);
            out += DMatrix::from_fn(n, n, |r, c| col[r] * col[c] / v);
        }
    }
    out
}

/// Symmetric PSD square root via eigendecomposition (negative eigenvalues
/// from roundoff clamp to zero).
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(m);
    let n = vals.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let v = vals[j].max(0.0);
        if v > 0.0 {
            let s = sqrt(v);
            let col = vecs.column(j);
            out += DMatrix::from_fn(n, n, |r, c| s * col[r] * col[c]);
        }
    }
    out
}

/// Square root and inverse square root of a symmetric positive definite
/// matrix; errors when the smallest eigenvalue falls at or below
/// `rel_tol * largest`.
pub fn sqrt_and_inv_sqrt_pd(m: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_symmetric(m, SYM_TOL)?;
    let (vals, vecs) = sym_eigen_desc(m);
    let n = vals.len();
    let scale = vals[0].max(f64::MIN_POSITIVE);
    let min = vals[n - 1];
    if min <= rel_tol * scale {
        return Err(Error::SingularWeight(format!(
            "min eigenvalue {min:e} <= {rel_tol:e} * max eigenvalue {scale:e}"
        )));
    }
    let mut root = DMatrix::zeros(n, n);
    let mut inv_root = DMatrix::zeros(n, n);
    for j in 0..n {
        let s = sqrt(vals[j]);
        let col = vecs.column(j);
        root += DMatrix::from_fn(n, n, |r, c| s * col[r] * col[c]);
        inv_root += DMatrix::from_fn(n, n, |r, c| col[r] * col[c] / s);
    }
    Ok((root, inv_root))
}

/// Full Householder QR of an `n x p` matrix with `p <= n`: returns `(Q, R)`
/// with `Q` orthonormal `n x n` and `R` upper triangular `n x p` such that
/// `A = Q R`. The trailing `n - p` columns of `Q` span the orthogonal
/// complement of the column space.
pub fn full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = a.shape();
    assert!(p <= n, "full_qr expects a tall matrix");
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut v = DVector::zeros(n);
    for j in 0..p {
        let mut norm2 = 0.0;
        for i in j..n {
            norm2 += r[(i, j)] * r[(i, j)];
        }
        let norm = sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        v[j] = r[(j, j)] - alpha;
        for i in (j + 1)..n {
            v[i] = r[(i, j)];
        }
        let vnorm2 = alpha * (alpha - r[(j, j)]); // = v'v / 2 for Householder
        if vnorm2 <= 0.0 {
            continue;
        }
        // R <- H R on columns j..p, with H = I - v v' / vnorm2
        for c in j..p {
            let mut dot = 0.0;
            for i in j..n {
                dot += v[i] * r[(i, c)];
            }
            let t = dot / vnorm2;
            for i in j..n {
                r[(i, c)] -= t * v[i];
            }
        }
        // Q <- Q H
        for row in 0..n {
            let mut dot = 0.0;
            for i in j..n {
                dot += q[(row, i)] * v[i];
            }
            let t = dot / vnorm2;
            for i in j..n {
                q[(row, i)] -= t * v[i];
            }
        }
    }
    // Zero out sub-diagonal roundoff so R is exactly triangular.
    for j in 0..p {
        for i in (j + 1)..n {
            r[(i, j)] = 0.0;
        }
    }
    (q, r)
}

/// Quadratic form `(x - v)' M (x - v)`.
pub fn centered_quad_form(x: &DVector<f64>, v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    let d = x - v;
    (d.transpose() * m * &d)[(0, 0)]
}

/// Solves `R z = b` for upper triangular `R` (errors on zero pivot).
pub fn solve_upper_triangular(r: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = r.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut z = b.clone();
    for i in (0..n).rev() {
        let mut acc = z[i];
        for j in (i + 1)..n {
            acc -= r[(i, j)] * z[j];
        }
        let piv = r[(i, i)];
        if piv == 0.0 {
            return Err(Error::RedundantConditions);
        }
        z[i] = acc / piv;
    }
    Ok(z)
}
