//! Model quality and disparity metrics, explanation extraction.

use alloc::{format, vec::Vec};
use super::{row_loss, ExplainerState, PredictorModel};
use crate::datagen::{Dataset, Group};
use crate::{Error, Result};

/// Mean negative log-likelihood of the (clamped) predicted probabilities.
pub fn predictive_loss(model: &PredictorModel, data: &Dataset) -> Result<f64> {
    if data.n_rows() == 0 {
        return Err(Error::InvalidData("empty data".into()));
    }
    let z = model.logit_scores(data, None)?;
    let mut acc = 0.0;
    for i in 0..data.n_rows() {
        acc += row_loss(z[i], data.y[i]);
    }
    Ok(acc / data.n_rows() as f64)
}

/// Signed difference in mean logit scores, group 1 minus group 0.
pub fn delta_log_odds(model: &PredictorModel, data: &Dataset, group: Group) -> Result<f64> {
    let z = model.clamped_logit_scores(data, None)?;
    let mask = data.group(group);
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..data.n_rows() {
        if mask[i] {
            s1 += z[i];
            n1 += 1;
        } else {
            s0 += z[i];
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::InvalidData(format!(
            "both {} groups must be present",
            group.label()
        )));
    }
    Ok(s1 / n1 as f64 - s0 / n0 as f64)
}

/// Squared group gap in mean logit scores (identically
/// `delta_log_odds^2`).
pub fn misalignment_term(model: &PredictorModel, data: &Dataset, group: Group) -> Result<f64> {
    let gap = delta_log_odds(model, data, group)?;
    Ok(gap * gap)
}

/// OLS coefficients (intercept first) of the model's logit scores on the
/// explainer variables `J`.
pub fn extract_explanation(
    model: &PredictorModel,
    data: &Dataset,
    j_vars: &[usize],
) -> Result<Vec<f64>> {
    for &j in j_vars {
        if j >= data.n_cols() {
            return Err(Error::InvalidParameter(format!(
                "explainer variable {j} missing from data"
            )));
        }
    }
    let state = ExplainerState::new(data, None, j_vars)?;
    let z = model.clamped_logit_scores(data, None)?;
    Ok(state.coefficients(&z).iter().copied().collect())
}

/// `||beta_hat_J - reference||^2` where `beta_hat_J` is the model's
/// explanation on `J`.
pub fn explainer_penalty(
    model: &PredictorModel,
    data: &Dataset,
    j_vars: &[usize],
    reference: &[f64],
) -> Result<f64> {
    if reference.len() != j_vars.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: j_vars.len() + 1,
            got: reference.len(),
        });
    }
    let beta = extract_explanation(model, data, j_vars)?;
    Ok(beta
        .iter()
        .zip(reference)
        .map(|(b, r)| (b - r) * (b - r))
        .sum())
}

/// Area under the ROC curve via the rank statistic; ties count one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y > 0.5).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidData("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    // Average ranks across ties, then sum positive ranks.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0; // 1-based ranks
        for &idx in &order[i..=j] {
            if labels[idx] > 0.5 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::tests::toy_data;
    use crate::train::{Arch, TrainSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn loss_examples() {
        // Uninformative predictor: z = 0 -> ln 2.
        let data = toy_data(3, 100, 4);
        let mut model = PredictorModel::init(Arch::Logistic, 4, None, 1);
        model.set_params(vec![0.0; 5]).unwrap();
        let loss = predictive_loss(&model, &data).unwrap();
        assert_abs_diff_eq!(loss, core::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_two_row_loss() {
        // y = (1, 0), p = (0.8, 0.4) -> -(ln .8 + ln .6)/2.
        let p1: f64 = 0.8;
        let p2: f64 = 0.4;
        let z1 = crate::fmath::ln(p1 / (1.0 - p1));
        let z2 = crate::fmath::ln(p2 / (1.0 - p2));
        let l = (row_loss(z1, 1.0) + row_loss(z2, 0.0)) / 2.0;
        assert_abs_diff_eq!(l, 0.36698458754010024, epsilon = 1e-9);
    }

    #[test]
    fn perfect_predictions_near_zero_loss() {
        let z = crate::train::logit_clamp_bound() + 10.0;
        assert!(row_loss(z, 1.0) <= 1e-10);
        assert!(row_loss(-z, 0.0) <= 1e-10);
    }

    #[test]
    fn constant_predictor_zero_disparity() {
        let data = toy_data(5, 200, 4);
        let mut model = PredictorModel::init(Arch::Logistic, 4, None, 1);
        model.set_params(vec![0.0, 0.0, 0.0, 0.0, 0.7]).unwrap();
        let d = delta_log_odds(&model, &data, Group::Minority).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            misalignment_term(&model, &data, Group::Minority).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn delta_squared_is_misalignment() {
        let data = toy_data(7, 300, 5);
        let model = PredictorModel::init(Arch::Logistic, 5, None, 9);
        let d = delta_log_odds(&model, &data, Group::Minority).unwrap();
        let m = misalignment_term(&model, &data, Group::Minority).unwrap();
        assert!(crate::fmath::abs(d * d - m) <= 1e-12);
    }

    #[test]
    fn explanation_recovers_linear_model() {
        // A logistic model's logit score is exactly linear in its inputs, so
        // regressing on those same variables returns its own coefficients.
        let data = toy_data(11, 400, 4);
        let mut model = PredictorModel::init(Arch::Logistic, 4, None, 1);
        model.set_params(vec![0.4, -0.3, 0.2, 0.1, -0.6]).unwrap();
        let beta = extract_explanation(&model, &data, &[0, 1, 2, 3]).unwrap();
        assert_abs_diff_eq!(beta[0], -0.6, epsilon = 1e-8);
        assert_abs_diff_eq!(beta[1], 0.4, epsilon = 1e-8);
        assert_abs_diff_eq!(beta[2], -0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(beta[3], 0.2, epsilon = 1e-8);
        assert_abs_diff_eq!(beta[4], 0.1, epsilon = 1e-8);
        // Penalty against its own coefficients is exactly zero.
        let pen = explainer_penalty(&model, &data, &[0, 1, 2, 3], &[-0.6, 0.4, -0.3, 0.2, 0.1])
            .unwrap();
        assert!(pen <= 1e-12);
    }

    #[test]
    fn zero_reference_penalty_is_norm() {
        let data = toy_data(13, 300, 4);
        let model = PredictorModel::init(Arch::Logistic, 4, None, 4);
        let beta = extract_explanation(&model, &data, &[0, 2]).unwrap();
        let pen = explainer_penalty(&model, &data, &[0, 2], &[0.0, 0.0, 0.0]).unwrap();
        let norm2: f64 = beta.iter().map(|b| b * b).sum();
        assert_abs_diff_eq!(pen, norm2, epsilon = 1e-12);
        assert!(pen > 0.0);
    }

    #[test]
    fn constant_model_explanation_is_intercept_only() {
        let data = toy_data(17, 200, 4);
        let mut model = PredictorModel::init(Arch::Logistic, 4, None, 1);
        model.set_params(vec![0.0, 0.0, 0.0, 0.0, 1.3]).unwrap();
        let beta = extract_explanation(&model, &data, &[1, 3]).unwrap();
        assert_abs_diff_eq!(beta[0], 1.3, epsilon = 1e-9);
        assert_abs_diff_eq!(beta[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(beta[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn auc_examples() {
        // Perfect separation.
        assert_abs_diff_eq!(
            auc(&[0.1, 0.9, 0.2, 0.8], &[0.0, 1.0, 0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Enumerated pairs: one concordant, one discordant.
        assert_abs_diff_eq!(
            auc(&[0.9, 0.8, 0.3], &[1.0, 0.0, 1.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // All ties.
        assert_abs_diff_eq!(
            auc(&[0.5, 0.5, 0.5, 0.5], &[1.0, 0.0, 1.0, 0.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // Single class errors.
        assert!(auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn auc_invariant_under_monotone_transforms() {
        let data = toy_data(19, 500, 5);
        let model = PredictorModel::init(Arch::Logistic, 5, None, 23);
        let z = model.logit_scores(&data, None).unwrap();
        let raw: Vec<f64> = z.iter().copied().collect();
        let squashed: Vec<f64> = z.iter().map(|&v| crate::fmath::tanh(0.3 * v)).collect();
        let a1 = auc(&raw, &data.y).unwrap();
        let a2 = auc(&squashed, &data.y).unwrap();
        assert_abs_diff_eq!(a1, a2, epsilon = 1e-12);
    }

    #[test]
    fn validated_spec_rejects_bad_dimensions() {
        let data = toy_data(23, 100, 4);
        let mut spec = TrainSpec::unconstrained(Arch::Logistic, Group::Minority, 1);
        spec.eta_explainer = 1.0;
        spec.explainer_vars = vec![0, 1];
        spec.reference_coeffs = vec![0.0, 0.0]; // should be 3
        assert!(spec.validate(&data).is_err());
    }
}
