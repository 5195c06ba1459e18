//! Constrained training of default predictors.
//!
//! Models are logistic regressions or two-hidden-layer tanh networks scored
//! on the logit scale. Training minimizes
//!
//! `L(f) + lambda * M(f) + eta * N(f)`
//!
//! where `L` is mean negative log-likelihood, `M` the squared gap in mean
//! logit scores between two groups, and `N` the squared distance between the
//! model's linear explanation (OLS coefficients of its logit scores on an
//! intercept plus a fixed variable set `J`) and reference coefficients. The
//! explanation coefficients are linear in the score vector, so `N` is
//! differentiated exactly through the least-squares projector.

mod lasso;
mod metrics;
mod optim;
mod regimes;

pub use lasso::{select_explainer_vars, SelectionTarget};
pub use metrics::{
    auc, delta_log_odds, explainer_penalty, extract_explanation, misalignment_term,
    predictive_loss,
};
pub use optim::{calibrate_lambda, fit, fit_with_init, OptimSettings};
pub use regimes::{
    run_regimes, FittedRegime, MetricsReport, MetricsRow, MisalignCase, RegimeLabel,
    RegimeRunConfig,
};

use alloc::{format, vec, vec::Vec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::datagen::{Dataset, Group};
use crate::fmath::{ln, sigmoid, sqrt, tanh};
use crate::rng::rng_from;
use crate::{Error, Result};

/// Probabilities are clamped this far from {0, 1}; logit scores accordingly.
pub const PROB_CLAMP: f64 = 1e-12;

pub(crate) fn logit_clamp_bound() -> f64 {
    ln((1.0 - PROB_CLAMP) / PROB_CLAMP)
}

/// Prediction-function class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Logistic,
    /// Two hidden tanh layers of the given widths.
    Mlp { hidden: (usize, usize) },
}

impl Arch {
    /// The default network: two hidden layers of 40 neurons.
    pub fn default_mlp() -> Self {
        Arch::Mlp { hidden: (40, 40) }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Arch::Logistic => "logit",
            Arch::Mlp { .. } => "mlp",
        }
    }

    pub fn param_count(&self, input_dim: usize) -> usize {
        match self {
            Arch::Logistic => input_dim + 1,
            Arch::Mlp { hidden: (h1, h2) } => h1 * input_dim + h1 + h2 * h1 + h2 + h2 + 1,
        }
    }
}

/// A trained (or freshly initialized) predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub arch: Arch,
    pub input_dim: usize,
    /// Columns of the dataset the model consumes; all columns when absent.
    pub input_cols: Option<Vec<usize>>,
    params: Vec<f64>,
    pub seed: u64,
}

struct ForwardCache {
    x: DMatrix<f64>,
    a1: Option<DMatrix<f64>>,
    a2: Option<DMatrix<f64>>,
    z: DVector<f64>,
}

impl PredictorModel {
    /// Xavier-uniform initialization, deterministic in `seed`.
    pub fn init(arch: Arch, input_dim: usize, input_cols: Option<Vec<usize>>, seed: u64) -> Self {
        let count = arch.param_count(input_dim);
        let mut params = vec![0.0; count];
        let mut rng = rng_from(seed);
        let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
            for p in slice {
                *p = rng.random_range(-limit..limit);
            }
        };
        match arch {
            Arch::Logistic => {
                let d = input_dim;
                fill(&mut params[..d], d, 1);
            }
            Arch::Mlp { hidden: (h1, h2) } => {
                let d = input_dim;
                let mut off = 0;
                fill(&mut params[off..off + h1 * d], d, h1);
                off += h1 * d + h1;
                fill(&mut params[off..off + h2 * h1], h1, h2);
                off += h2 * h1 + h2;
                fill(&mut params[off..off + h2], h2, 1);
            }
        }
        Self {
            arch,
            input_dim,
            input_cols,
            params,
            seed,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub fn from_params(
        arch: Arch,
        input_dim: usize,
        input_cols: Option<Vec<usize>>,
        params: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let expected = arch.param_count(input_dim);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Self {
            arch,
            input_dim,
            input_cols,
            params,
            seed,
        })
    }

    /// Extracts the model's input matrix for the given rows (all rows when
    /// `rows` is `None`).
    fn input_matrix(&self, data: &Dataset, rows: Option<&[usize]>) -> Result<DMatrix<f64>> {
        let cols: Vec<usize> = match &self.input_cols {
            Some(c) => c.clone(),
            None => (0..data.n_cols()).collect(),
        };
        if cols.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: cols.len(),
            });
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= data.n_cols()) {
            return Err(Error::InvalidParameter(format!(
                "model input column {bad} missing from data with {} columns",
                data.n_cols()
            )));
        }
        let take = |i: usize| match rows {
            Some(r) => r[i],
            None => i,
        };
        let n = rows.map_or(data.n_rows(), <[usize]>::len);
        Ok(DMatrix::from_fn(n, cols.len(), |i, j| {
            data.x[(take(i), cols[j])]
        }))
    }

    fn forward_cache(&self, x: DMatrix<f64>) -> ForwardCache {
        match self.arch {
            Arch::Logistic => {
                let d = self.input_dim;
                let w = DVector::from_column_slice(&self.params[..d]);
                let b = self.params[d];
                let z = &x * w + DVector::from_element(x.nrows(), b);
                ForwardCache {
                    x,
                    a1: None,
                    a2: None,
                    z,
                }
            }
            Arch::Mlp { hidden: (h1, h2) } => {
                let d = self.input_dim;
                let mut off = 0;
                // Row-major W1 (h1 x d): column i of W1' is row i of W1.
                let w1t = DMatrix::from_column_slice(d, h1, &self.params[off..off + h1 * d]);
                off += h1 * d;
                let b1 = &self.params[off..off + h1];
                off += h1;
                let w2t = DMatrix::from_column_slice(h1, h2, &self.params[off..off + h2 * h1]);
                off += h2 * h1;
                let b2 = &self.params[off..off + h2];
                off += h2;
                let w3 = DVector::from_column_slice(&self.params[off..off + h2]);
                off += h2;
                let b3 = self.params[off];

                let mut a1 = &x * &w1t;
                for i in 0..a1.nrows() {
                    for j in 0..h1 {
                        a1[(i, j)] = tanh(a1[(i, j)] + b1[j]);
                    }
                }
                let mut a2 = &a1 * &w2t;
                for i in 0..a2.nrows() {
                    for j in 0..h2 {
                        a2[(i, j)] = tanh(a2[(i, j)] + b2[j]);
                    }
                }
                let z = &a2 * w3 + DVector::from_element(x.nrows(), b3);
                ForwardCache {
                    x,
                    a1: Some(a1),
                    a2: Some(a2),
                    z,
                }
            }
        }
    }

    /// Gradient of `sum_i dz[i] * z_i(theta)` in flat parameter layout.
    fn backward(&self, cache: &ForwardCache, dz: &DVector<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        match self.arch {
            Arch::Logistic => {
                let d = self.input_dim;
                let gw = cache.x.transpose() * dz;
                grad[..d].copy_from_slice(gw.as_slice());
                grad[d] = dz.sum();
            }
            Arch::Mlp { hidden: (h1, h2) } => {
                let d = self.input_dim;
                let a1 = cache.a1.as_ref().expect("mlp cache");
                let a2 = cache.a2.as_ref().expect("mlp cache");
                let w1_end = h1 * d;
                let w2_off = w1_end + h1;
                let w3_off = w2_off + h2 * h1 + h2;
                let w2t = DMatrix::from_column_slice(h1, h2, &self.params[w2_off..w2_off + h2 * h1]);
                let w3 = DVector::from_column_slice(&self.params[w3_off..w3_off + h2]);

                // Output layer.
                let gw3 = a2.transpose() * dz;
                grad[w3_off..w3_off + h2].copy_from_slice(gw3.as_slice());
                grad[w3_off + h2] = dz.sum();

                // Hidden layer 2: G2 = (dz w3') .* (1 - a2^2)
                let mut g2 = DMatrix::zeros(a2.nrows(), h2);
                for i in 0..a2.nrows() {
                    for j in 0..h2 {
                        g2[(i, j)] = dz[i] * w3[j] * (1.0 - a2[(i, j)] * a2[(i, j)]);
                    }
                }
                let gw2 = a1.transpose() * &g2; // (h1 x h2); W2 row-major h2 x h1
                for r in 0..h2 {
                    for c in 0..h1 {
                        grad[w2_off + r * h1 + c] = gw2[(c, r)];
                    }
                }
                let b2_off = w2_off + h2 * h1;
                for j in 0..h2 {
                    grad[b2_off + j] = g2.column(j).sum();
                }

                // Hidden layer 1: G1 = (G2 W2) .* (1 - a1^2)
                let mut g1 = &g2 * w2t.transpose();
                for i in 0..g1.nrows() {
                    for j in 0..h1 {
                        g1[(i, j)] *= 1.0 - a1[(i, j)] * a1[(i, j)];
                    }
                }
                let gw1 = cache.x.transpose() * &g1; // (d x h1); W1 row-major h1 x d
                for r in 0..h1 {
                    for c in 0..d {
                        grad[r * d + c] = gw1[(c, r)];
                    }
                }
                for j in 0..h1 {
                    grad[w1_end + j] = g1.column(j).sum();
                }
            }
        }
        grad
    }

    /// Raw logit scores for the given rows (all rows when `None`).
    pub fn logit_scores(&self, data: &Dataset, rows: Option<&[usize]>) -> Result<DVector<f64>> {
        let x = self.input_matrix(data, rows)?;
        Ok(self.forward_cache(x).z)
    }

    /// Logit scores clamped consistently with the probability clamp.
    pub fn clamped_logit_scores(
        &self,
        data: &Dataset,
        rows: Option<&[usize]>,
    ) -> Result<DVector<f64>> {
        let bound = logit_clamp_bound();
        let mut z = self.logit_scores(data, rows)?;
        for v in z.iter_mut() {
            *v = v.clamp(-bound, bound);
        }
        Ok(z)
    }

    /// Predicted default probabilities, strictly inside (0, 1).
    pub fn predict_proba(&self, data: &Dataset, rows: Option<&[usize]>) -> Result<DVector<f64>> {
        let mut z = self.logit_scores(data, rows)?;
        for v in z.iter_mut() {
            *v = sigmoid(*v).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        }
        Ok(z)
    }
}

/// Optimization problem: multipliers, explainer variable set, references.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub arch: Arch,
    /// Columns the model consumes; all when `None`.
    pub input_cols: Option<Vec<usize>>,
    pub lambda_misalign: f64,
    pub eta_explainer: f64,
    /// Explainer variable set `J` (columns of the full dataset).
    pub explainer_vars: Vec<usize>,
    /// Reference coefficients, intercept first, length `|J| + 1`.
    pub reference_coeffs: Vec<f64>,
    pub misalign_group: Group,
    pub optimizer: OptimSettings,
    pub seed: u64,
}

impl TrainSpec {
    pub fn unconstrained(arch: Arch, group: Group, seed: u64) -> Self {
        Self {
            arch,
            input_cols: None,
            lambda_misalign: 0.0,
            eta_explainer: 0.0,
            explainer_vars: vec![],
            reference_coeffs: vec![],
            misalign_group: group,
            optimizer: OptimSettings::default(),
            seed,
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if !(self.lambda_misalign >= 0.0) || !(self.eta_explainer >= 0.0) {
            return Err(Error::InvalidParameter("multipliers must be >= 0".into()));
        }
        for &j in &self.explainer_vars {
            if j >= data.n_cols() {
                return Err(Error::InvalidParameter(format!(
                    "explainer variable {j} missing from data"
                )));
            }
        }
        if self.eta_explainer > 0.0 {
            if self.explainer_vars.is_empty() {
                return Err(Error::InvalidParameter(
                    "explainer penalty active but J is empty".into(),
                ));
            }
            if self.reference_coeffs.len() != self.explainer_vars.len() + 1 {
                return Err(Error::DimensionMismatch {
                    expected: self.explainer_vars.len() + 1,
                    got: self.reference_coeffs.len(),
                });
            }
        }
        if let Some(cols) = &self.input_cols {
            for &c in cols {
                if c >= data.n_cols() {
                    return Err(Error::InvalidParameter(format!(
                        "input column {c} missing from data"
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn input_dim(&self, data: &Dataset) -> usize {
        self.input_cols
            .as_ref()
            .map_or(data.n_cols(), alloc::vec::Vec::len)
    }
}

/// The three objective components and their multiplier-weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub total: f64,
    pub predictive: f64,
    pub misalign: f64,
    pub penalty: f64,
}

pub(crate) fn row_loss(z: f64, y: f64) -> f64 {
    let p = sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(y * ln(p) + (1.0 - y) * ln(1.0 - p))
}

pub(crate) fn row_loss_grad(z: f64, y: f64) -> f64 {
    let p = sigmoid(z);
    if p <= PROB_CLAMP || p >= 1.0 - PROB_CLAMP {
        0.0
    } else {
        p - y
    }
}

/// Least-squares design for the explanation: intercept plus the J columns.
pub(crate) fn explanation_design(
    data: &Dataset,
    rows: Option<&[usize]>,
    j_vars: &[usize],
) -> DMatrix<f64> {
    let n = rows.map_or(data.n_rows(), <[usize]>::len);
    let take = |i: usize| match rows {
        Some(r) => r[i],
        None => i,
    };
    DMatrix::from_fn(n, j_vars.len() + 1, |i, c| {
        if c == 0 {
            1.0
        } else {
            data.x[(take(i), j_vars[c - 1])]
        }
    })
}

pub(crate) struct ExplainerState {
    design: DMatrix<f64>,
    /// `(D'D)^{-1}`.
    gram_inv: DMatrix<f64>,
}

impl ExplainerState {
    pub(crate) fn new(
        data: &Dataset,
        rows: Option<&[usize]>,
        j_vars: &[usize],
    ) -> Result<Self> {
        let design = explanation_design(data, rows, j_vars);
        if design.nrows() <= design.ncols() {
            return Err(Error::InvalidData(format!(
                "explanation regression needs more rows than {} coefficients",
                design.ncols()
            )));
        }
        let gram = design.transpose() * &design;
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidMatrix("rank-deficient explanation design".into()))?;
        let gram_inv = chol.inverse();
        Ok(Self { design, gram_inv })
    }

    pub(crate) fn coefficients(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.gram_inv * (self.design.transpose() * z)
    }

    /// Per-row gradient factor of `||beta_hat - ref||^2` with respect to the
    /// score vector: `2 D (D'D)^{-1} (beta_hat - ref)`.
    pub(crate) fn score_gradient(
        &self,
        beta_hat: &DVector<f64>,
        reference: &DVector<f64>,
    ) -> DVector<f64> {
        2.0 * (&self.design * (&self.gram_inv * (beta_hat - reference)))
    }
}

fn group_mask(data: &Dataset, rows: Option<&[usize]>, group: Group) -> Vec<bool> {
    let labels = data.group(group);
    match rows {
        Some(r) => r.iter().map(|&i| labels[i]).collect(),
        None => labels.to_vec(),
    }
}

/// Full objective (and optionally its exact gradient) evaluated on the given
/// rows: `L + lambda M + eta N`, every term computed on exactly those rows.
pub fn objective_and_gradient(
    spec: &TrainSpec,
    model: &PredictorModel,
    data: &Dataset,
    rows: Option<&[usize]>,
    want_gradient: bool,
) -> Result<(ObjectiveParts, Option<Vec<f64>>)> {
    spec.validate(data)?;
    let n = rows.map_or(data.n_rows(), <[usize]>::len);
    if n == 0 {
        return Err(Error::InvalidData("empty batch".into()));
    }
    let x = model.input_matrix(data, rows)?;
    let cache = model.forward_cache(x);
    let z = &cache.z;
    let take = |i: usize| match rows {
        Some(r) => r[i],
        None => i,
    };

    let mut predictive = 0.0;
    for i in 0..n {
        predictive += row_loss(z[i], data.y[take(i)]);
    }
    predictive /= n as f64;

    let mut dz = DVector::zeros(n);
    if want_gradient {
        for i in 0..n {
            dz[i] = row_loss_grad(z[i], data.y[take(i)]) / n as f64;
        }
    }

    let mut misalign = 0.0;
    if spec.lambda_misalign > 0.0 {
        let mask = group_mask(data, rows, spec.misalign_group);
        let n1 = mask.iter().filter(|&&b| b).count();
        let n0 = n - n1;
        if n1 == 0 || n0 == 0 {
            return Err(Error::InvalidData(format!(
                "misalignment term needs both {} groups present",
                spec.misalign_group.label()
            )));
        }
        let bound = logit_clamp_bound();
        let zc = |i: usize| z[i].clamp(-bound, bound);
        let mut m1 = 0.0;
        let mut m0 = 0.0;
        for i in 0..n {
            if mask[i] {
                m1 += zc(i);
            } else {
                m0 += zc(i);
            }
        }
        m1 /= n1 as f64;
        m0 /= n0 as f64;
        let gap = m1 - m0;
        misalign = gap * gap;
        if want_gradient {
            for i in 0..n {
                let side = if mask[i] {
                    1.0 / n1 as f64
                } else {
                    -1.0 / n0 as f64
                };
                dz[i] += spec.lambda_misalign * 2.0 * gap * side;
            }
        }
    }

    let mut penalty = 0.0;
    if spec.eta_explainer > 0.0 {
        let state = ExplainerState::new(data, rows, &spec.explainer_vars)?;
        let bound = logit_clamp_bound();
        let zc = DVector::from_fn(n, |i, _| z[i].clamp(-bound, bound));
        let beta_hat = state.coefficients(&zc);
        let reference = DVector::from_column_slice(&spec.reference_coeffs);
        penalty = (&beta_hat - &reference).norm_squared();
        if want_gradient {
            let factor = state.score_gradient(&beta_hat, &reference);
            for i in 0..n {
                dz[i] += spec.eta_explainer * factor[i];
            }
        }
    }

    let parts = ObjectiveParts {
        total: predictive + spec.lambda_misalign * misalign + spec.eta_explainer * penalty,
        predictive,
        misalign,
        penalty,
    };
    let grad = want_gradient.then(|| model.backward(&cache, &dz));
    Ok((parts, grad))
}

/// Exact analytic gradient of the full objective on the given rows.
pub fn gradient(
    spec: &TrainSpec,
    model: &PredictorModel,
    data: &Dataset,
    rows: Option<&[usize]>,
) -> Result<Vec<f64>> {
    let (_, grad) = objective_and_gradient(spec, model, data, rows, true)?;
    Ok(grad.expect("gradient requested"))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::datagen::{generate, DgpConfig};
    use approx::assert_abs_diff_eq;

    pub(crate) fn toy_data(seed: u64, rows: usize, cols: usize) -> Dataset {
        let mut cfg = DgpConfig::default_credit(rows, seed);
        cfg.n_cols = cols;
        cfg.true_coefficients = (0..cols)
            .map(|j| if j % 2 == 0 { 0.6 } else { -0.4 })
            .collect();
        cfg.interactions = vec![(0, 1, 0.3)];
        cfg.minority_shifts = vec![(0, 0.6)];
        generate(&cfg).unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(Arch::Logistic.param_count(20), 21);
        assert_eq!(
            Arch::Mlp { hidden: (40, 40) }.param_count(50),
            40 * 50 + 40 + 40 * 40 + 40 + 40 + 1
        );
    }

    #[test]
    fn finite_difference_matches_analytic_logistic() {
        let data = toy_data(3, 200, 5);
        let mut spec = TrainSpec::unconstrained(Arch::Logistic, Group::Minority, 7);
        spec.lambda_misalign = 0.7;
        spec.eta_explainer = 0.3;
        spec.explainer_vars = vec![0, 2, 4];
        spec.reference_coeffs = vec![0.1, -0.2, 0.3, 0.0];
        let model = PredictorModel::init(Arch::Logistic, 5, None, 7);
        check_gradient(&spec, &model, &data, 1e-5, 1e-6);
    }

    #[test]
    fn finite_difference_matches_analytic_mlp() {
        let data = toy_data(5, 120, 10);
        let mut spec = TrainSpec::unconstrained(Arch::Mlp { hidden: (8, 6) }, Group::Subprime, 11);
        spec.lambda_misalign = 0.5;
        spec.eta_explainer = 0.2;
        spec.explainer_vars = vec![1, 3, 5];
        spec.reference_coeffs = vec![0.0, 0.1, -0.1, 0.2];
        let model = PredictorModel::init(Arch::Mlp { hidden: (8, 6) }, 10, None, 13);
        check_gradient(&spec, &model, &data, 1e-5, 1e-5);
    }

    pub(crate) fn check_gradient(
        spec: &TrainSpec,
        model: &PredictorModel,
        data: &Dataset,
        h: f64,
        tol: f64,
    ) {
        let grad = gradient(spec, model, data, None).unwrap();
        let mut worst = 0.0f64;
        let count = model.params().len();
        // Probe a deterministic subset of coordinates on big models.
        let stride = (count / 64).max(1);
        for idx in (0..count).step_by(stride) {
            let mut plus = model.clone();
            let mut params = plus.params().to_vec();
            params[idx] += h;
            plus.set_params(params).unwrap();
            let (op, _) = objective_and_gradient(spec, &plus, data, None, false).unwrap();
            let mut minus = model.clone();
            let mut params = minus.params().to_vec();
            params[idx] -= h;
            minus.set_params(params).unwrap();
            let (om, _) = objective_and_gradient(spec, &minus, data, None, false).unwrap();
            let fd = (op.total - om.total) / (2.0 * h);
            let scale = crate::fmath::abs(grad[idx]).max(crate::fmath::abs(fd)).max(1e-8);
            worst = worst.max(crate::fmath::abs(grad[idx] - fd) / scale);
        }
        assert!(worst <= tol.max(1e-4), "worst relative error {worst}");
    }

    #[test]
    fn taylor_first_order_check() {
        let data = toy_data(9, 100, 4);
        let spec = TrainSpec::unconstrained(Arch::Logistic, Group::Minority, 3);
        let model = PredictorModel::init(Arch::Logistic, 4, None, 3);
        let (base, grad) = objective_and_gradient(&spec, &model, &data, None, true).unwrap();
        let grad = grad.unwrap();
        let mut rng = rng_from(21);
        let delta: Vec<f64> = (0..grad.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
        let eps = 1e-6;
        let mut moved = model.clone();
        let params: Vec<f64> = model
            .params()
            .iter()
            .zip(&delta)
            .map(|(p, d)| p + eps * d)
            .collect();
        moved.set_params(params).unwrap();
        let (shifted, _) = objective_and_gradient(&spec, &moved, &data, None, false).unwrap();
        let predicted = base.total + eps * dot;
        assert!(
            crate::fmath::abs(shifted.total - predicted) <= 1e-9 + eps * eps * 100.0,
            "{} vs {}",
            shifted.total,
            predicted
        );
    }

    #[test]
    fn input_cols_restrict_model_view() {
        let data = toy_data(13, 50, 6);
        let model = PredictorModel::init(Arch::Logistic, 2, Some(vec![1, 4]), 5);
        let z = model.logit_scores(&data, None).unwrap();
        assert_eq!(z.len(), 50);
    }
}
