//! Explainer synthesis and the restriction/first-best decision rules.

use alloc::format;
use nalgebra::{DMatrix, DVector};

use super::Explainer;
use crate::fmath::abs;
use crate::linalg::{self, PINV_TOL};
use crate::scenario::ScenarioDistribution;
use crate::{Error, Result};

/// Deterministic eigenvector canonicalization: within eigenvalue ties
/// (relative gap below 1e-12) columns are ordered by the coordinate index of
/// their largest-magnitude entry, and each column's sign makes that entry
/// positive.
fn canonical_eigvecs(vals: &DVector<f64>, vecs: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = vals.len();
    let mut cols: alloc::vec::Vec<(f64, usize, DVector<f64>)> = (0..n)
        .map(|j| {
            let mut col = vecs.column(j).into_owned();
            let mut anchor = 0;
            for i in 1..n {
                if abs(col[i]) > abs(col[anchor]) + 1e-12 {
                    anchor = i;
                }
            }
            if col[anchor] < 0.0 {
                col = -col;
            }
            (vals[j], anchor, col)
        })
        .collect();
    let scale = cols
        .iter()
        .fold(0.0f64, |a, (v, _, _)| a.max(abs(*v)))
        .max(f64::MIN_POSITIVE);
    cols.sort_by(|a, b| {
        let close = abs(a.0 - b.0) <= 1e-12 * scale;
        if close {
            a.1.cmp(&b.1)
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal)
        }
    });
    let out_vals = DVector::from_fn(n, |i, _| cols[i].0);
    let out_vecs = DMatrix::from_fn(n, n, |i, j| cols[j].2[i]);
    (out_vals, out_vecs)
}

/// The k-dimensional linear projection preserving the most information about
/// a target with second moment `M` under the `Omega`-weighted metric: rows
/// are the top-k eigenvectors of `Omega^{1/2} M Omega^{1/2}`, mapped back
/// through `Omega^{1/2}`.
pub fn prediction_explainer(
    second_moment: &DMatrix<f64>,
    weight: &DMatrix<f64>,
    k: usize,
) -> Result<Explainer> {
    let n = second_moment.nrows();
    if weight.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weight.nrows(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "explainer dimension k = {k} must be in 1..={n}"
        )));
    }
    linalg::check_symmetric(second_moment, linalg::SYM_TOL)?;
    let (sqrt_w, _) = linalg::sqrt_and_inv_sqrt_pd(weight, PINV_TOL)?;
    let weighted = linalg::symmetrize(&(&sqrt_w * second_moment * &sqrt_w));
    let (vals, vecs) = linalg::sym_eigen_desc(&weighted);
    let (_, vecs) = canonical_eigvecs(&vals, &vecs);
    let top = vecs.columns(0, k).into_owned();
    Explainer::new(top.transpose() * &sqrt_w)
}

/// A targeted explainer, possibly degenerate when there is no misalignment
/// to target.
#[derive(Debug, Clone)]
pub struct TargetedExplainer {
    pub explainer: Explainer,
    /// True when the misalignment second moment vanished and the rows are an
    /// arbitrary orthonormal set.
    pub degenerate: bool,
}

/// The prediction explainer applied to the misalignment second moment
/// `E[(u_bar - w_bar)(u_bar - w_bar)']`. `n_samples`/`seed` drive the Monte
/// Carlo fallback when the distribution lacks analytic moments.
pub fn targeted_explainer(
    dist: &ScenarioDistribution,
    weight: &DMatrix<f64>,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<TargetedExplainer> {
    let n = dist.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "explainer dimension k = {k} must be in 1..={n}"
        )));
    }
    let moments = dist.misalignment_moments(n_samples, seed)?;
    let m2 = &moments.second_moment_gap;
    if linalg::max_abs(m2) <= 1e-14 {
        let mut rows = DMatrix::zeros(k, n);
        for i in 0..k {
            rows[(i, i)] = 1.0;
        }
        return Ok(TargetedExplainer {
            explainer: Explainer::new(rows)?,
            degenerate: true,
        });
    }
    Ok(TargetedExplainer {
        explainer: prediction_explainer(m2, weight, k)?,
        degenerate: false,
    })
}

/// True iff the misalignment rank condition for a first-best explainer
/// holds: `rank E[(u_bar - w_bar)(u_bar - w_bar)'] <= k` (numerical rank,
/// relative threshold 1e-8).
pub fn first_best_achievable(
    dist: &ScenarioDistribution,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<bool> {
    let moments = dist.misalignment_moments(n_samples, seed)?;
    Ok(moments.rank_gap <= k)
}

/// Whether an ex-ante restriction can be worth considering next to an
/// optimal k-dimensional explainer. Returns `false` (never restrict) when
/// `lambda_min(Var(Omega^{1/2} w_bar)) >= lambda_(k+1)(weighted gap moment)`;
/// `true` means a restriction may help and the regime search decides.
/// Requires the distribution's weights to be fixed and equal to `weight`.
pub fn exante_recommended(
    dist: &ScenarioDistribution,
    weight: &DMatrix<f64>,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<bool> {
    let fixed = dist.fixed_common_weight().ok_or_else(|| {
        Error::InvalidParameter(
            "ex-ante recommendation requires a weight matrix fixed across states".into(),
        )
    })?;
    if linalg::max_abs(&(&fixed - weight)) > 1e-10 * (1.0 + linalg::max_abs(weight)) {
        return Err(Error::InvalidParameter(
            "supplied weight differs from the distribution's fixed weight".into(),
        ));
    }
    let moments = dist.misalignment_moments(n_samples, seed)?;
    let (sqrt_w, _) = linalg::sqrt_and_inv_sqrt_pd(weight, PINV_TOL)?;
    let var_w = linalg::symmetrize(&(&sqrt_w * &moments.var_principal_bliss * &sqrt_w));
    let gap_w = linalg::symmetrize(&(&sqrt_w * &moments.second_moment_gap * &sqrt_w));
    let (var_vals, _) = linalg::sym_eigen_desc(&var_w);
    let (gap_vals, _) = linalg::sym_eigen_desc(&gap_w);
    let n = var_vals.len();
    let lambda_min_var = var_vals[n - 1];
    let lambda_k1_gap = if k < n { gap_vals[k] } else { 0.0 };
    Ok(lambda_min_var < lambda_k1_gap)
}

/// Eigenvectors of the weighted gap moment mapped back to constraint rows
/// (`rows = V' Omega^{1/2}`); shared by the explainer synthesis and the
/// regime search.
pub(crate) fn weighted_gap_rows(
    m2_gap: &DMatrix<f64>,
    weight: &DMatrix<f64>,
    start: usize,
    count: usize,
) -> Result<DMatrix<f64>> {
    let (sqrt_w, _) = linalg::sqrt_and_inv_sqrt_pd(weight, PINV_TOL)?;
    let weighted = linalg::symmetrize(&(&sqrt_w * m2_gap * &sqrt_w));
    let (vals, vecs) = linalg::sym_eigen_desc(&weighted);
    let (_, vecs) = canonical_eigvecs(&vals, &vecs);
    let band = vecs.columns(start, count).into_owned();
    Ok(band.transpose() * &sqrt_w)
}
