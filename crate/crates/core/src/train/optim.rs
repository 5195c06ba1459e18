//! Mini-batch adaptive-moment training of the Lagrangian objective, and the
//! disparity-halving multiplier calibration.

use alloc::{format, vec, vec::Vec};
use nalgebra::DVector;
use rand::Rng;

use super::{
    delta_log_odds, logit_clamp_bound, objective_and_gradient, row_loss_grad, ExplainerState,
    PredictorModel, TrainSpec,
};
use crate::datagen::{Dataset, Group};
use crate::fmath::{abs, sqrt};
use crate::rng::{child_seed, rng_from};
use crate::{Error, Result};

/// Optimizer hyperparameters (adaptive moments with bias correction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimSettings {
    pub step_size: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimSettings {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            batch_size: 256,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], opts: &OptimSettings) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(opts.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(opts.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = opts.beta1 * self.m[i] + (1.0 - opts.beta1) * grad[i];
            self.v[i] = opts.beta2 * self.v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= opts.step_size * m_hat / (sqrt(v_hat) + opts.epsilon);
        }
    }
}

/// Trains a model on the Lagrangian objective with mini-batch adaptive
/// moments. Deterministic given the spec seed (fixed shuffle order). The
/// explanation penalty is differentiated exactly on each batch through that
/// batch's least-squares projector; the parameters achieving the best
/// full-sample objective across epoch boundaries are returned, so the final
/// objective never exceeds the initial one.
pub fn fit(spec: &TrainSpec, train: &Dataset) -> Result<PredictorModel> {
    fit_with_init(spec, train, None)
}

/// [`fit`] with an optional warm start (e.g. a constrained re-solve starting
/// from the unconstrained optimum).
pub fn fit_with_init(
    spec: &TrainSpec,
    train: &Dataset,
    init: Option<&PredictorModel>,
) -> Result<PredictorModel> {
    spec.validate(train)?;
    if train.n_rows() == 0 {
        return Err(Error::InvalidData("empty training data".into()));
    }
    let input_dim = spec.input_dim(train);
    let mut model = match init {
        Some(m) => {
            if m.arch != spec.arch || m.input_dim != input_dim || m.input_cols != spec.input_cols
            {
                return Err(Error::InvalidParameter(
                    "warm-start model does not match the spec's architecture".into(),
                ));
            }
            m.clone()
        }
        None => PredictorModel::init(spec.arch, input_dim, spec.input_cols.clone(), spec.seed),
    };
    let n = train.n_rows();
    let opts = &spec.optimizer;
    if opts.batch_size == 0 || opts.epochs == 0 {
        return Err(Error::InvalidParameter("batch size and epochs must be positive".into()));
    }
    let mut adam = AdamState::new(model.params().len());
    let (initial, _) = objective_and_gradient(spec, &model, train, None, false)?;
    let mut best = (initial.total, model.params().to_vec());
    let use_penalty = spec.eta_explainer > 0.0 && !spec.explainer_vars.is_empty();
    let reference = DVector::from_column_slice(&spec.reference_coeffs);
    let bound = logit_clamp_bound();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..opts.epochs {
        let mut rng = rng_from(child_seed(spec.seed, 0x0e70_c000 + epoch as u64));
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(opts.batch_size.min(n)) {
            let bsz = batch.len();
            let x = model.input_matrix(train, Some(batch))?;
            let cache = model.forward_cache(x);
            let z = &cache.z;
            let mut dz = DVector::zeros(bsz);
            for (bi, &row) in batch.iter().enumerate() {
                dz[bi] = row_loss_grad(z[bi], train.y[row]) / bsz as f64;
            }
            if spec.lambda_misalign > 0.0 {
                let labels = train.group(spec.misalign_group);
                let mut s1 = 0.0;
                let mut n1 = 0usize;
                let mut s0 = 0.0;
                let mut n0 = 0usize;
                for (bi, &row) in batch.iter().enumerate() {
                    let v = z[bi].clamp(-bound, bound);
                    if labels[row] {
                        s1 += v;
                        n1 += 1;
                    } else {
                        s0 += v;
                        n0 += 1;
                    }
                }
                // Batches missing a group contribute no misalignment signal.
                if n1 > 0 && n0 > 0 {
                    let gap = s1 / n1 as f64 - s0 / n0 as f64;
                    for (bi, &row) in batch.iter().enumerate() {
                        let side = if labels[row] {
                            1.0 / n1 as f64
                        } else {
                            -1.0 / n0 as f64
                        };
                        dz[bi] += spec.lambda_misalign * 2.0 * gap * side;
                    }
                }
            }
            if use_penalty {
                // Exact penalty gradient on this batch (the batch's own
                // explanation regression).
                let state = ExplainerState::new(train, Some(batch), &spec.explainer_vars)?;
                let zc = DVector::from_fn(bsz, |i, _| z[i].clamp(-bound, bound));
                let beta_hat = state.coefficients(&zc);
                let factor = state.score_gradient(&beta_hat, &reference);
                for bi in 0..bsz {
                    dz[bi] += spec.eta_explainer * factor[bi];
                }
            }
            let grad = model.backward(&cache, &dz);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!(
                    "non-finite gradient at epoch {epoch}"
                )));
            }
            let mut params = model.params().to_vec();
            adam.update(&mut params, &grad, opts);
            model.set_params(params)?;
        }

        let (objective, _) = objective_and_gradient(spec, &model, train, None, false)?;
        if !objective.total.is_finite() {
            return Err(Error::Diverged(format!(
                "objective became non-finite after epoch {epoch}: \
                 predictive {:.6e}, misalign {:.6e}, penalty {:.6e}",
                objective.predictive, objective.misalign, objective.penalty
            )));
        }
        if objective.total < best.0 {
            best = (objective.total, model.params().to_vec());
        }
    }
    model.set_params(best.1)?;
    Ok(model)
}

/// Bisection on the misalignment multiplier until the fitted model's
/// absolute log-odds disparity lands within `target_ratio * (1 +- tolerance)`
/// of the base model's. Errors when 40 trial fits cannot bracket or hit the
/// band.
pub fn calibrate_lambda(
    template: &TrainSpec,
    train: &Dataset,
    group: Group,
    base_model: &PredictorModel,
    target_ratio: f64,
    tolerance: f64,
) -> Result<f64> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::InvalidParameter("target ratio must be in (0, 1)".into()));
    }
    let base = abs(delta_log_odds(base_model, train, group)?);
    if base <= 1e-12 {
        return Err(Error::InvalidData(
            "base disparity is zero; nothing to calibrate".into(),
        ));
    }
    let target = target_ratio * base;
    let band = (target * (1.0 - tolerance), target * (1.0 + tolerance));
    let disparity_at = |lambda: f64| -> Result<f64> {
        let mut spec = template.clone();
        spec.lambda_misalign = lambda;
        spec.misalign_group = group;
        let model = fit(&spec, train)?;
        Ok(abs(delta_log_odds(&model, train, group)?))
    };
    let mut fits = 0usize;
    let mut charge = move || -> Result<()> {
        fits += 1;
        if fits > 40 {
            return Err(Error::NoConvergence(
                "multiplier calibration exceeded 40 trial fits".into(),
            ));
        }
        Ok(())
    };

    let mut lo = 0.0f64;
    let mut lo_val = base;
    let mut hi = if template.lambda_misalign > 0.0 {
        template.lambda_misalign
    } else {
        1.0
    };
    charge()?;
    let mut hi_val = disparity_at(hi)?;
    let mut expansions = 0;
    while hi_val > target && expansions < 13 {
        lo = hi;
        lo_val = hi_val;
        hi *= 4.0;
        expansions += 1;
        charge()?;
        hi_val = disparity_at(hi)?;
    }
    if hi_val > target {
        return Err(Error::NoConvergence(
            "could not bracket the disparity target".into(),
        ));
    }
    for &(l, v) in [(lo, lo_val), (hi, hi_val)].iter() {
        if v >= band.0 && v <= band.1 {
            return Ok(l);
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        charge()?;
        let v = disparity_at(mid)?;
        if v >= band.0 && v <= band.1 {
            return Ok(mid);
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
