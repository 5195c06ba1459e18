//! L1-penalized logistic regression for explainer-variable selection.
//!
//! The penalty is tuned by bisection until exactly `k` coefficients are
//! nonzero (a k+1 support is resolved by dropping the smallest-magnitude
//! coefficient). Solved by FISTA with soft-thresholding; the intercept is
//! unpenalized.

use alloc::{format, vec::Vec};
use nalgebra::{DMatrix, DVector};

use crate::datagen::{Dataset, Group};
use crate::fmath::{abs, sigmoid, sqrt};
use crate::{Error, Result};

/// What the selection regression predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionTarget {
    /// The default outcome.
    Default,
    /// A group membership label.
    Group(Group),
}

impl SelectionTarget {
    fn values(&self, data: &Dataset) -> Vec<f64> {
        match self {
            SelectionTarget::Default => data.y.clone(),
            SelectionTarget::Group(g) => data
                .group(*g)
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

struct L1Fit {
    weights: DVector<f64>,
    support: Vec<usize>,
}

/// FISTA on mean logistic loss plus `penalty * ||w||_1` (intercept free).
fn l1_logistic(x: &DMatrix<f64>, t: &[f64], penalty: f64, lipschitz: f64, iters: usize) -> L1Fit {
    let (n, d) = x.shape();
    let nf = n as f64;
    let step = 1.0 / lipschitz;
    let mut w = DVector::zeros(d);
    let mut b = 0.0f64;
    let mut w_prev = w.clone();
    let mut b_prev = b;
    let mut momentum = 1.0f64;
    for it in 0..iters {
        let m_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * momentum * momentum));
        let accel = (momentum - 1.0) / m_next;
        let wy = if it == 0 { w.clone() } else { &w + accel * (&w - &w_prev) };
        let by = if it == 0 { b } else { b + accel * (b - b_prev) };
        momentum = m_next;

        // Gradient of the smooth part at the extrapolated point.
        let z = x * &wy + DVector::from_element(n, by);
        let mut resid = DVector::zeros(n);
        for i in 0..n {
            resid[i] = (sigmoid(z[i]) - t[i]) / nf;
        }
        let grad_w = x.transpose() * &resid;
        let grad_b: f64 = resid.sum();

        w_prev = w.clone();
        b_prev = b;
        let thresh = step * penalty;
        w = DVector::from_fn(d, |j, _| {
            let v = wy[j] - step * grad_w[j];
            if v > thresh {
                v - thresh
            } else if v < -thresh {
                v + thresh
            } else {
                0.0
            }
        });
        b = by - step * grad_b;
    }
    let support = (0..d).filter(|&j| w[j] != 0.0).collect();
    L1Fit { weights: w, support }
}

fn lipschitz_bound(x: &DMatrix<f64>) -> f64 {
    // sigma_max(X)^2 / (4n) bounds the logistic Hessian; power iteration on
    // X'X (deterministic start).
    let (n, d) = x.shape();
    let mut v = DVector::from_element(d, 1.0 / sqrt(d as f64));
    let mut norm = 1.0;
    for _ in 0..30 {
        let u = x.transpose() * (x * &v);
        norm = u.norm();
        if norm == 0.0 {
            return 1.0;
        }
        v = u / norm;
    }
    (norm / (4.0 * n as f64)).max(1e-12)
}

/// Selects the explainer variable set: the support of an L1-penalized
/// logistic regression of the target on all columns, with the penalty tuned
/// so exactly `k` coefficients are nonzero.
pub fn select_explainer_vars(
    data: &Dataset,
    target: SelectionTarget,
    k: usize,
) -> Result<Vec<usize>> {
    let d = data.n_cols();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "selection size k = {k} must be in 1..={d}"
        )));
    }
    if k == d {
        return Ok((0..d).collect());
    }
    let t = target.values(data);
    let pos = t.iter().filter(|&&v| v > 0.5).count();
    if pos == 0 || pos == t.len() {
        return Err(Error::InvalidData("selection target has a single class".into()));
    }
    let lipschitz = lipschitz_bound(&data.x);
    let iters = 600;

    // Penalty ceiling: the zero solution's score gradient bound.
    let n = data.n_rows() as f64;
    let t_mean: f64 = t.iter().sum::<f64>() / n;
    let mut pen_max = 0.0f64;
    for j in 0..d {
        let mut g = 0.0;
        for i in 0..data.n_rows() {
            g += data.x[(i, j)] * (t[i] - t_mean);
        }
        pen_max = pen_max.max(abs(g) / n);
    }
    pen_max *= 1.05;

    let mut lo = 0.0f64; // support >= k here (unpenalized fit uses all columns)
    let mut hi = pen_max; // support 0 here
    let mut best: Option<L1Fit> = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fit = l1_logistic(&data.x, &t, mid, lipschitz, iters);
        let size = fit.support.len();
        if size == k {
            return Ok(fit.support);
        }
        if size == k + 1 {
            best = Some(fit);
        }
        if size > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if let Some(fit) = best {
        // Drop the smallest-magnitude coefficient.
        let mut support = fit.support;
        let drop = support
            .iter()
            .copied()
            .min_by(|&a, &b| {
                abs(fit.weights[a])
                    .partial_cmp(&abs(fit.weights[b]))
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .expect("nonempty support");
        support.retain(|&j| j != drop);
        return Ok(support);
    }
    Err(Error::NoConvergence(format!(
        "could not tune the L1 penalty to a support of exactly {k}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, DgpConfig};

    fn loaded_config(seed: u64) -> DgpConfig {
        let n_cols = 12;
        let mut beta = vec![0.0; n_cols];
        beta[0] = 0.8;
        beta[1] = -0.6;
        beta[2] = 0.5;
        DgpConfig {
            n_rows: 6000,
            n_cols,
            true_coefficients: beta,
            interactions: vec![],
            base_default_rate: 0.2,
            minority_rate: 0.3,
            minority_shifts: vec![(4, 1.0), (5, 0.9), (6, 0.8), (7, 0.9)],
            common_factor_loading: 0.2,
            subprime_quantile: 0.15,
            subprime_index_extra: vec![],
            seed,
        }
    }

    #[test]
    fn perfect_predictor_survives_selection() {
        // Column 0 is (nearly) the label itself once the coefficient is huge.
        let mut cfg = loaded_config(3);
        cfg.true_coefficients = vec![0.0; 12];
        cfg.true_coefficients[0] = 12.0;
        let data = generate(&cfg).unwrap();
        let j = select_explainer_vars(&data, SelectionTarget::Default, 2).unwrap();
        assert!(j.contains(&0), "selected {j:?}");
    }

    #[test]
    fn full_k_returns_all_columns() {
        let data = generate(&loaded_config(5)).unwrap();
        let j = select_explainer_vars(&data, SelectionTarget::Default, 12).unwrap();
        assert_eq!(j, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn group_target_recovers_loaded_columns() {
        let data = generate(&loaded_config(7)).unwrap();
        let j = select_explainer_vars(&data, SelectionTarget::Group(Group::Minority), 4).unwrap();
        assert_eq!(j.len(), 4);
        let loaded = [4usize, 5, 6, 7];
        let hits = j.iter().filter(|c| loaded.contains(c)).count();
        assert!(hits * 10 >= loaded.len() * 8, "recovered {hits}/4: {j:?}");
    }

    #[test]
    fn exact_support_size() {
        let data = generate(&loaded_config(9)).unwrap();
        for k in [1usize, 3, 6] {
            let j = select_explainer_vars(&data, SelectionTarget::Default, k).unwrap();
            assert_eq!(j.len(), k);
        }
    }
}
