//! Synthetic credit-scoring data: group-loaded covariates, logistic default
//! outcomes, train/test splits, and deployment-shift variants.
//!
//! Covariates come from a one-factor Gaussian model with group-dependent
//! means: a minority indicator shifts configured columns, a common factor
//! induces cross-covariate correlation, and the remainder is idiosyncratic
//! noise. Default follows `Bernoulli(logistic(intercept + X beta + inter-
//! actions))` with the intercept calibrated by bisection so the mean default
//! probability hits the configured base rate. The subprime segment is the
//! configured worst quantile of the latent risk index.

use alloc::{format, string::String, vec, vec::Vec};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::fmath::{sigmoid, sqrt};
use crate::rng::{child_seed, rng_from};
use crate::{Error, Result};

/// Which group label a metric or penalty conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Minority,
    Subprime,
}

impl Group {
    pub fn label(&self) -> &'static str {
        match self {
            Group::Minority => "minority",
            Group::Subprime => "subprime",
        }
    }
}

/// Affine map from raw covariate units to the units a dataset is stored in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Scaler {
    fn apply(&self, x: &mut DMatrix<f64>) {
        for j in 0..x.ncols() {
            let (m, s) = (self.means[j], self.sds[j]);
            for i in 0..x.nrows() {
                x[(i, j)] = (x[(i, j)] - m) / s;
            }
        }
    }

    fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut sds = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let mean = x.column(j).sum() / n;
            let var = x.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            means.push(mean);
            sds.push(if var > 1e-24 { sqrt(var) } else { 1.0 });
        }
        Self { means, sds }
    }

    /// Composition: raw -> self -> other applied after self.
    fn then(&self, later: &Scaler) -> Scaler {
        // x2 = ((x - m1)/s1 - m2)/s2 = (x - (m1 + m2 s1)) / (s1 s2)
        let means = self
            .means
            .iter()
            .zip(&self.sds)
            .zip(&later.means)
            .map(|((m1, s1), m2)| m1 + m2 * s1)
            .collect();
        let sds = self
            .sds
            .iter()
            .zip(&later.sds)
            .map(|(s1, s2)| s1 * s2)
            .collect();
        Scaler { means, sds }
    }
}

/// A generated dataset: standardized covariates, binary outcomes, group
/// labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    /// Default outcomes in {0.0, 1.0}.
    pub y: Vec<f64>,
    pub minority: Vec<bool>,
    pub subprime: Vec<bool>,
    pub column_names: Vec<String>,
    /// Map from raw generator units to the stored units.
    pub scaler_from_raw: Option<Scaler>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn group(&self, group: Group) -> &[bool] {
        match group {
            Group::Minority => &self.minority,
            Group::Subprime => &self.subprime,
        }
    }

    /// Checks the structural invariants: no non-finite values, both group
    /// labels with prevalence in [1%, 99%].
    pub fn validate(&self) -> Result<()> {
        if self.x.iter().any(|v| !v.is_finite()) || self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("dataset contains non-finite values".into()));
        }
        let n = self.n_rows();
        if n == 0 {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        for group in [Group::Minority, Group::Subprime] {
            let share = self.group(group).iter().filter(|&&b| b).count() as f64 / n as f64;
            if !(0.01..=0.99).contains(&share) {
                return Err(Error::InvalidData(format!(
                    "{} prevalence {share:.4} outside [0.01, 0.99]",
                    group.label()
                )));
            }
        }
        Ok(())
    }

    fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.n_cols(), |i, j| self.x[(rows[i], j)]);
        Dataset {
            x,
            y: rows.iter().map(|&r| self.y[r]).collect(),
            minority: rows.iter().map(|&r| self.minority[r]).collect(),
            subprime: rows.iter().map(|&r| self.subprime[r]).collect(),
            column_names: self.column_names.clone(),
            scaler_from_raw: self.scaler_from_raw.clone(),
        }
    }

    /// Re-expresses this dataset's covariates in the units of `reference`
    /// (e.g. deployment data in the units a model was trained in). Both
    /// datasets must track their raw-unit scalers.
    pub fn in_units_of(&self, reference: &Dataset) -> Result<Dataset> {
        let (mine, theirs) = match (&self.scaler_from_raw, &reference.scaler_from_raw) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidData(
                    "unit conversion needs raw-unit scalers on both datasets".into(),
                ))
            }
        };
        let mut out = self.clone();
        for j in 0..out.n_cols() {
            let (ms, ss) = (mine.means[j], mine.sds[j]);
            let (mr, sr) = (theirs.means[j], theirs.sds[j]);
            for i in 0..out.n_rows() {
                out.x[(i, j)] = (out.x[(i, j)] * ss + ms - mr) / sr;
            }
        }
        out.scaler_from_raw = Some(theirs.clone());
        Ok(out)
    }
}

/// Deployment-shift specification: covariate mean shifts (optionally only
/// for minority rows) and/or coefficient shifts that regenerate outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftSpec {
    /// `(column, mean delta in raw units)`.
    pub covariate_mean_shifts: Vec<(usize, f64)>,
    /// Apply the covariate shifts to minority rows only.
    pub minority_only: bool,
    /// `(column, coefficient delta)` applied to the outcome model.
    pub coefficient_shifts: Vec<(usize, f64)>,
}

impl ShiftSpec {
    pub fn is_null(&self) -> bool {
        self.covariate_mean_shifts.is_empty() && self.coefficient_shifts.is_empty()
    }

    fn validate(&self, n_cols: usize) -> Result<()> {
        for &(c, _) in self
            .covariate_mean_shifts
            .iter()
            .chain(self.coefficient_shifts.iter())
        {
            if c >= n_cols {
                return Err(Error::InvalidParameter(format!(
                    "shift references column {c}, but there are {n_cols}"
                )));
            }
        }
        Ok(())
    }
}

/// Configuration of the synthetic data-generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    /// True outcome coefficients, one per column.
    pub true_coefficients: Vec<f64>,
    /// `(col_a, col_b, coefficient)` interaction terms.
    pub interactions: Vec<(usize, usize, f64)>,
    /// Mean default probability the intercept is calibrated to; in
    /// `(0.01, 0.5)`.
    pub base_default_rate: f64,
    pub minority_rate: f64,
    /// `(column, raw-unit mean shift)` for minority rows.
    pub minority_shifts: Vec<(usize, f64)>,
    /// Loading on the shared factor inducing cross-covariate correlation.
    pub common_factor_loading: f64,
    /// Share of rows labeled subprime (worst tail of the latent risk index).
    pub subprime_quantile: f64,
    /// `(column, loading)` added to the segmentation index only; lets the
    /// subprime label weight some covariates beyond their outcome effect.
    pub subprime_index_extra: Vec<(usize, f64)>,
    pub seed: u64,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidParameter("empty dataset requested".into()));
        }
        if self.true_coefficients.len() != self.n_cols {
            return Err(Error::InvalidParameter(format!(
                "need {} coefficients, got {}",
                self.n_cols,
                self.true_coefficients.len()
            )));
        }
        if !(self.base_default_rate > 0.01 && self.base_default_rate < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "base default rate {} outside (0.01, 0.5)",
                self.base_default_rate
            )));
        }
        if !(self.minority_rate > 0.01 && self.minority_rate < 0.99) {
            return Err(Error::InvalidParameter("minority rate outside (0.01, 0.99)".into()));
        }
        if !(self.subprime_quantile > 0.01 && self.subprime_quantile < 0.99) {
            return Err(Error::InvalidParameter("subprime quantile outside (0.01, 0.99)".into()));
        }
        if !(0.0..1.0).contains(&self.common_factor_loading) {
            return Err(Error::InvalidParameter("factor loading outside [0, 1)".into()));
        }
        for &(a, b, _) in &self.interactions {
            if a >= self.n_cols || b >= self.n_cols {
                return Err(Error::InvalidParameter(format!(
                    "interaction ({a}, {b}) references a missing column"
                )));
            }
        }
        for &(c, _) in self.minority_shifts.iter().chain(&self.subprime_index_extra) {
            if c >= self.n_cols {
                return Err(Error::InvalidParameter(format!(
                    "group structure references missing column {c}"
                )));
            }
        }
        Ok(())
    }

    /// Default 50-covariate credit process: decaying signal coefficients,
    /// six interaction pairs, minority loading on risk-increasing columns.
    pub fn default_credit(n_rows: usize, seed: u64) -> Self {
        let n_cols = 50;
        let mut beta = vec![0.0; n_cols];
        for (j, b) in beta.iter_mut().enumerate().take(32) {
            let sign = if j % 3 == 2 { -1.0 } else { 1.0 };
            *b = sign * 0.55 / (1.0 + 0.15 * j as f64);
        }
        // Later columns carry signal so 20-variable models stay lossy.
        for (j, c) in [(33, 0.30), (36, 0.30), (38, -0.28), (41, 0.28), (44, -0.26), (47, 0.24)]
        {
            beta[j] = c;
        }
        // Pure group proxies: strongly minority-correlated, no outcome
        // effect of their own.
        for j in [20, 22, 25, 27] {
            beta[j] = 0.0;
        }
        let interactions = vec![
            (0, 3, 0.80),
            (1, 4, 0.75),
            (2, 6, -0.70),
            (5, 9, 0.70),
            (7, 12, 0.65),
            (10, 15, -0.60),
            (0, 1, 0.60),
            (3, 8, 0.55),
        ];
        // Minority rows shift up on two risk drivers and on the proxies.
        let minority_shifts = vec![
            (0, 0.45),
            (3, 0.40),
            (20, 0.85),
            (22, 0.80),
            (25, 0.75),
            (27, 0.70),
        ];
        Self {
            n_rows,
            n_cols,
            true_coefficients: beta,
            interactions,
            base_default_rate: 0.15,
            minority_rate: 0.22,
            minority_shifts,
            common_factor_loading: 0.25,
            subprime_quantile: 0.12,
            // The subprime segmentation over-weights two mild risk columns,
            // so segment membership is predictable beyond raw default risk.
            subprime_index_extra: vec![(30, 1.0), (31, 0.9)],
            seed,
        }
    }
}

fn linear_index(
    x: &DMatrix<f64>,
    beta: &[f64],
    interactions: &[(usize, usize, f64)],
) -> Vec<f64> {
    let n = x.nrows();
    let mut eta = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                acc += b * x[(i, j)];
            }
        }
        for &(a, bcol, c) in interactions {
            acc += c * x[(i, a)] * x[(i, bcol)];
        }
        eta[i] = acc;
    }
    eta
}

/// Intercept such that the mean of `logistic(c + eta_i)` equals `target`.
fn calibrate_intercept(eta: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let mean: f64 = eta.iter().map(|&e| sigmoid(mid + e)).sum::<f64>() / eta.len() as f64;
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn generate_impl(config: &DgpConfig, shift: Option<&ShiftSpec>, seed: u64) -> Result<Dataset> {
    config.validate()?;
    if let Some(s) = shift {
        s.validate(config.n_cols)?;
    }
    let (n, d) = (config.n_rows, config.n_cols);
    let mut rng_groups = rng_from(child_seed(seed, 0));
    let mut rng_factor = rng_from(child_seed(seed, 1));
    let mut rng_idio = rng_from(child_seed(seed, 2));
    let mut rng_outcome = rng_from(child_seed(seed, 3));

    let minority: Vec<bool> = (0..n)
        .map(|_| rng_groups.random::<f64>() < config.minority_rate)
        .collect();
    let lam = config.common_factor_loading;
    let idio_scale = sqrt(1.0 - lam * lam);
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let factor: f64 = rng_factor.sample(StandardNormal);
        for j in 0..d {
            let z: f64 = rng_idio.sample(StandardNormal);
            x[(i, j)] = lam * factor + idio_scale * z;
        }
    }
    for &(j, delta) in &config.minority_shifts {
        for i in 0..n {
            if minority[i] {
                x[(i, j)] += delta;
            }
        }
    }
    if let Some(s) = shift {
        for &(j, delta) in &s.covariate_mean_shifts {
            for i in 0..n {
                if !s.minority_only || minority[i] {
                    x[(i, j)] += delta;
                }
            }
        }
    }

    let mut beta = config.true_coefficients.clone();
    if let Some(s) = shift {
        for &(j, delta) in &s.coefficient_shifts {
            beta[j] += delta;
        }
    }
    let eta = linear_index(&x, &beta, &config.interactions);

    // Subprime: worst `subprime_quantile` share of the segmentation index
    // under the *base* coefficients (segment membership does not move with
    // model shift).
    let mut base_eta = if shift.is_some_and(|s| !s.coefficient_shifts.is_empty()) {
        linear_index(&x, &config.true_coefficients, &config.interactions)
    } else {
        eta.clone()
    };
    for &(j, loading) in &config.subprime_index_extra {
        for i in 0..n {
            base_eta[i] += loading * x[(i, j)];
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        base_eta[a]
            .partial_cmp(&base_eta[b])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let n_subprime = ((config.subprime_quantile * n as f64) + 0.5) as usize;
    let n_subprime = n_subprime.clamp(1, n - 1);
    let mut subprime = vec![false; n];
    for &i in &order[n - n_subprime..] {
        subprime[i] = true;
    }

    let intercept = calibrate_intercept(&eta, config.base_default_rate);
    let y: Vec<f64> = eta
        .iter()
        .map(|&e| {
            let p = sigmoid(intercept + e);
            if rng_outcome.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    let scaler = Scaler::fit(&x);
    let mut x_std = x;
    scaler.apply(&mut x_std);
    let column_names = (0..d).map(|j| format!("x{j:02}")).collect();
    let data = Dataset {
        x: x_std,
        y,
        minority,
        subprime,
        column_names,
        scaler_from_raw: Some(scaler),
    };
    data.validate()?;
    Ok(data)
}

/// Draws a dataset from the configured process; deterministic in
/// `config.seed`.
pub fn generate(config: &DgpConfig) -> Result<Dataset> {
    generate_impl(config, None, config.seed)
}

/// A deployment dataset under the given shift; standardized with the *base*
/// process's scaler so it lives in the same units as [`generate`]'s output.
/// A null shift reproduces `generate` exactly.
pub fn shift(config: &DgpConfig, spec: &ShiftSpec, seed: u64) -> Result<Dataset> {
    let mut shifted = generate_impl(config, Some(spec), seed)?;
    if spec.is_null() && seed == config.seed {
        return Ok(shifted);
    }
    // Re-express in base units.
    let base_scaler = {
        let base = generate_impl(config, None, config.seed)?;
        base.scaler_from_raw.expect("generator always records a scaler")
    };
    let own = shifted.scaler_from_raw.clone().expect("scaler recorded");
    for j in 0..shifted.n_cols() {
        for i in 0..shifted.n_rows() {
            let raw = shifted.x[(i, j)] * own.sds[j] + own.means[j];
            shifted.x[(i, j)] = (raw - base_scaler.means[j]) / base_scaler.sds[j];
        }
    }
    shifted.scaler_from_raw = Some(base_scaler);
    Ok(shifted)
}

/// Seed-deterministic disjoint exhaustive split; standardization is fit on
/// the train rows and applied to both sides.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = dataset.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(child_seed(seed, 0x5011));
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((train_fraction * n as f64) + 0.5) as usize;
    let n_train = n_train.clamp(1, n - 1);
    let mut train = dataset.select_rows(&order[..n_train]);
    let mut test = dataset.select_rows(&order[n_train..]);
    let train_scaler = Scaler::fit(&train.x);
    train_scaler.apply(&mut train.x);
    train_scaler.apply(&mut test.x);
    let composed = dataset
        .scaler_from_raw
        .as_ref()
        .map(|s| s.then(&train_scaler));
    train.scaler_from_raw = composed.clone();
    test.scaler_from_raw = composed;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmath::abs;
    use approx::assert_abs_diff_eq;

    fn small_config(seed: u64) -> DgpConfig {
        DgpConfig {
            n_rows: 4000,
            n_cols: 6,
            true_coefficients: vec![1.0, -0.8, 0.5, 0.0, 0.3, 0.0],
            interactions: vec![(0, 1, 0.4)],
            base_default_rate: 0.2,
            minority_rate: 0.25,
            minority_shifts: vec![(0, 0.8), (2, 0.5)],
            common_factor_loading: 0.3,
            subprime_quantile: 0.12,
            subprime_index_extra: vec![],
            seed,
        }
    }

    #[test]
    fn byte_identical_given_seed() {
        let a = generate(&small_config(7)).unwrap();
        let b = generate(&small_config(7)).unwrap();
        assert_eq!(a, b);
        let c = generate(&small_config(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn intercept_only_rate_matches_base() {
        let mut cfg = small_config(3);
        cfg.true_coefficients = vec![0.0; 6];
        cfg.interactions.clear();
        cfg.minority_shifts.clear();
        let data = generate(&cfg).unwrap();
        let rate = data.y.iter().sum::<f64>() / data.n_rows() as f64;
        let sd = sqrt(0.2 * 0.8 / data.n_rows() as f64);
        assert!(abs(rate - 0.2) <= 4.0 * sd, "rate {rate}");
    }

    #[test]
    fn realized_rate_tracks_configured_rate() {
        let data = generate(&small_config(11)).unwrap();
        let rate = data.y.iter().sum::<f64>() / data.n_rows() as f64;
        assert!(abs(rate - 0.2) / 0.2 <= 0.2, "rate {rate}");
    }

    #[test]
    fn strong_single_covariate_separates() {
        let mut cfg = small_config(5);
        cfg.n_rows = 10_000;
        cfg.true_coefficients = vec![10.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        cfg.interactions.clear();
        cfg.minority_shifts = vec![(1, 0.8), (2, 0.5)];
        let data = generate(&cfg).unwrap();
        // AUC of the raw single-variable score.
        let scores: Vec<f64> = (0..data.n_rows()).map(|i| data.x[(i, 0)]).collect();
        let auc = crate::train::auc(&scores, &data.y).unwrap();
        assert!(auc > 0.95, "auc {auc}");
    }

    #[test]
    fn minority_loading_raises_minority_default_rate() {
        let data = generate(&small_config(13)).unwrap();
        let (mut dm, mut nm, mut dmaj, mut nmaj) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..data.n_rows() {
            if data.minority[i] {
                dm += data.y[i];
                nm += 1.0;
            } else {
                dmaj += data.y[i];
                nmaj += 1.0;
            }
        }
        assert!(dm / nm > dmaj / nmaj);
    }

    #[test]
    fn group_prevalence_within_four_sigma() {
        let data = generate(&small_config(17)).unwrap();
        let n = data.n_rows() as f64;
        let share = data.minority.iter().filter(|&&b| b).count() as f64 / n;
        let sd = sqrt(0.25 * 0.75 / n);
        assert!(abs(share - 0.25) <= 4.0 * sd);
        let sub = data.subprime.iter().filter(|&&b| b).count() as f64 / n;
        assert!(abs(sub - 0.12) <= 0.02);
    }

    #[test]
    fn split_is_exact_deterministic_and_leak_free() {
        let data = generate(&small_config(23)).unwrap();
        let (train, test) = split(&data, 0.5, 99).unwrap();
        assert_eq!(train.n_rows(), 2000);
        assert_eq!(test.n_rows(), 2000);
        let (train2, _) = split(&data, 0.5, 99).unwrap();
        assert_eq!(train, train2);
        // Train columns are standardized exactly; test columns generally not.
        let nt = train.n_rows() as f64;
        let mut max_test_mean = 0.0f64;
        for j in 0..train.n_cols() {
            let mean = train.x.column(j).sum() / nt;
            let var = train.x.column(j).iter().map(|v| v * v).sum::<f64>() / nt - mean * mean;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-6);
            max_test_mean = max_test_mean.max(abs(test.x.column(j).sum() / test.n_rows() as f64));
        }
        assert!(max_test_mean > 1e-4, "test set suspiciously centered: {max_test_mean}");
    }

    #[test]
    fn null_shift_reproduces_generate() {
        let cfg = small_config(31);
        let base = generate(&cfg).unwrap();
        let shifted = shift(&cfg, &ShiftSpec::default(), cfg.seed).unwrap();
        assert_eq!(base, shifted);
    }

    #[test]
    fn risk_covariate_shift_raises_default_rate() {
        let cfg = small_config(37);
        let base = generate(&cfg).unwrap();
        let spec = ShiftSpec {
            covariate_mean_shifts: vec![(0, 1.0)],
            minority_only: false,
            coefficient_shifts: vec![],
        };
        let deploy = shift(&cfg, &spec, cfg.seed).unwrap();
        let rate = |d: &Dataset| d.y.iter().sum::<f64>() / d.n_rows() as f64;
        assert!(rate(&deploy) > rate(&base));
    }

    #[test]
    fn minority_targeted_shift_moves_minority_covariates() {
        let cfg = small_config(41);
        let base = generate(&cfg).unwrap();
        let spec = ShiftSpec {
            covariate_mean_shifts: vec![(0, 1.0)],
            minority_only: true,
            coefficient_shifts: vec![],
        };
        let deploy = shift(&cfg, &spec, cfg.seed).unwrap();
        let mean_min = |d: &Dataset| {
            let mut acc = 0.0;
            let mut cnt = 0.0;
            for i in 0..d.n_rows() {
                if d.minority[i] {
                    acc += d.x[(i, 0)];
                    cnt += 1.0;
                }
            }
            acc / cnt
        };
        assert!(mean_min(&deploy) > mean_min(&base) + 0.5);
    }
}
