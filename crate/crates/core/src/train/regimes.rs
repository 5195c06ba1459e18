//! The four-regime comparison: unconstrained lender, regulator, and the
//! lender under prediction-explainer and targeted-explainer audits, for both
//! misalignment cases and both function classes.
//!
//! Disparate impact: the lender minimizes prediction loss only; the
//! regulator adds the squared minority/majority log-odds gap with a
//! multiplier calibrated to roughly halve the lender's disparity. Subprime
//! risk: roles swap — the lender compresses the subprime/prime gap, the
//! regulator fits. Audit rows re-solve the lender's own problem plus an
//! explanation penalty anchored at the regulator's explanation on the
//! selected variable set (default-predictive variables for the prediction
//! explainer, group-predictive variables for the targeted one).

use alloc::{string::String, vec, vec::Vec};

use super::{
    auc, calibrate_lambda, delta_log_odds, extract_explanation, fit, predictive_loss,
    fit_with_init, select_explainer_vars, Arch, OptimSettings, PredictorModel,
    SelectionTarget, TrainSpec,
};
use crate::datagen::{Dataset, Group};
use crate::rng::child_seed;
use crate::{Error, Result};

/// Which misalignment story the run tells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisalignCase {
    DisparateImpact,
    SubprimeRisk,
}

impl MisalignCase {
    pub fn label(&self) -> &'static str {
        match self {
            MisalignCase::DisparateImpact => "di",
            MisalignCase::SubprimeRisk => "subprime",
        }
    }

    pub fn group(&self) -> Group {
        match self {
            MisalignCase::DisparateImpact => Group::Minority,
            MisalignCase::SubprimeRisk => Group::Subprime,
        }
    }
}

/// The four rows of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    Lender,
    Regulator,
    PredictionExplainer,
    TargetedExplainer,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 4] = [
        RegimeLabel::Lender,
        RegimeLabel::Regulator,
        RegimeLabel::PredictionExplainer,
        RegimeLabel::TargetedExplainer,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RegimeLabel::Lender => "lender",
            RegimeLabel::Regulator => "regulator",
            RegimeLabel::PredictionExplainer => "pred_explainer",
            RegimeLabel::TargetedExplainer => "targeted_explainer",
        }
    }
}

/// Configuration of a regime-comparison run.
#[derive(Debug, Clone)]
pub struct RegimeRunConfig {
    pub case: MisalignCase,
    pub archs: Vec<Arch>,
    /// Explainer variable count (both selection targets).
    pub k_explainer: usize,
    /// Covariate budget of the simple (logistic) function class.
    pub logit_cols: usize,
    /// Misalignment multiplier; calibrated on the first architecture when
    /// absent.
    pub lambda: Option<f64>,
    /// Explanation-penalty multiplier for the audited rows.
    pub eta: f64,
    pub optimizer: OptimSettings,
    /// Optimizer for the simple (logistic) class; when absent the shared
    /// settings are used with a 10x step size, since the convex class
    /// tolerates far larger steps within the same epoch budget.
    pub logit_optimizer: Option<OptimSettings>,
    /// Optimizer for the warm-started audited fits; when absent they run
    /// full-batch (exact penalty gradients) with a larger step, since they
    /// only adjust an already-fitted model.
    pub constrained_optimizer: Option<OptimSettings>,
    /// Optimizer used during multiplier calibration (usually fewer epochs).
    pub calibration_optimizer: Option<OptimSettings>,
    pub calibration_ratio: f64,
    pub calibration_tolerance: f64,
    pub seed: u64,
}

impl RegimeRunConfig {
    pub fn new(case: MisalignCase, seed: u64) -> Self {
        Self {
            case,
            archs: vec![Arch::default_mlp(), Arch::Logistic],
            k_explainer: 10,
            logit_cols: 20,
            lambda: None,
            eta: 50.0,
            optimizer: OptimSettings::default(),
            logit_optimizer: None,
            constrained_optimizer: None,
            calibration_optimizer: None,
            calibration_ratio: 0.5,
            calibration_tolerance: 0.1,
            seed,
        }
    }
}

/// One fitted regime's out-of-sample metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub case: String,
    pub arch: String,
    pub regime: String,
    pub auc: f64,
    pub log_loss: f64,
    pub delta_log_odds: f64,
    pub deploy_auc: Option<f64>,
    pub deploy_log_loss: Option<f64>,
    pub deploy_delta_log_odds: Option<f64>,
}

/// A fitted regime's model, kept for coefficient tables and persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedRegime {
    pub arch: String,
    pub regime: String,
    pub model: PredictorModel,
}

/// The regime table plus the calibrated multiplier, selected variables, and
/// the fitted models.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub lambda: f64,
    pub prediction_vars: Vec<usize>,
    pub targeted_vars: Vec<usize>,
    pub models: Vec<FittedRegime>,
}

impl MetricsReport {
    pub fn row(&self, arch: &str, regime: RegimeLabel) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.arch == arch && r.regime == regime.label())
    }
}

fn metrics_row(
    config: &RegimeRunConfig,
    arch: Arch,
    regime: RegimeLabel,
    model: &PredictorModel,
    test: &Dataset,
    deploy: Option<&Dataset>,
) -> Result<MetricsRow> {
    let group = config.case.group();
    let z = model.logit_scores(test, None)?;
    let scores: Vec<f64> = z.iter().copied().collect();
    let mut row = MetricsRow {
        case: config.case.label().into(),
        arch: arch.label().into(),
        regime: regime.label().into(),
        auc: auc(&scores, &test.y)?,
        log_loss: predictive_loss(model, test)?,
        delta_log_odds: delta_log_odds(model, test, group)?,
        deploy_auc: None,
        deploy_log_loss: None,
        deploy_delta_log_odds: None,
    };
    if let Some(dep) = deploy {
        let zd = model.logit_scores(dep, None)?;
        let sd: Vec<f64> = zd.iter().copied().collect();
        row.deploy_auc = Some(auc(&sd, &dep.y)?);
        row.deploy_log_loss = Some(predictive_loss(model, dep)?);
        row.deploy_delta_log_odds = Some(delta_log_odds(model, dep, group)?);
    }
    Ok(row)
}

/// Lender and regulator objective multipliers per case: `(lender lambda,
/// regulator lambda)` applied to the group-gap term.
fn case_lambdas(case: MisalignCase, lambda: f64) -> (f64, f64) {
    match case {
        MisalignCase::DisparateImpact => (0.0, lambda),
        MisalignCase::SubprimeRisk => (lambda, 0.0),
    }
}

/// Runs the full regime comparison.
pub fn run_regimes(
    config: &RegimeRunConfig,
    train: &Dataset,
    test: &Dataset,
    deploy: Option<&Dataset>,
) -> Result<MetricsReport> {
    if config.archs.is_empty() {
        return Err(Error::InvalidParameter("no architectures requested".into()));
    }
    let group = config.case.group();
    let prediction_vars = select_explainer_vars(train, SelectionTarget::Default, config.k_explainer)?;
    let targeted_vars =
        select_explainer_vars(train, SelectionTarget::Group(group), config.k_explainer)?;
    // The simple class sees the most default-predictive columns.
    let logit_cols = select_explainer_vars(train, SelectionTarget::Default, config.logit_cols)?;

    let logit_optimizer = config.logit_optimizer.unwrap_or(OptimSettings {
        step_size: 10.0 * config.optimizer.step_size,
        ..config.optimizer
    });
    let constrained_optimizer = config.constrained_optimizer.unwrap_or(OptimSettings {
        batch_size: usize::MAX,
        epochs: 400,
        step_size: 4.0 * config.optimizer.step_size,
        ..config.optimizer
    });
    let spec_for = |arch: Arch, lambda: f64, seed_slot: u64| -> TrainSpec {
        let mut spec = TrainSpec::unconstrained(arch, group, child_seed(config.seed, seed_slot));
        spec.lambda_misalign = lambda;
        spec.optimizer = config.optimizer;
        if matches!(arch, Arch::Logistic) {
            spec.input_cols = Some(logit_cols.clone());
            spec.optimizer = logit_optimizer;
        }
        spec
    };

    // Calibrate the misalignment multiplier on the first architecture: the
    // penalized side's solution should roughly halve the disparity of the
    // unpenalized side's.
    let first_arch = config.archs[0];
    let lambda = match config.lambda {
        Some(l) => l,
        None => {
            let base_spec = spec_for(first_arch, 0.0, 0);
            let base_model = fit(&base_spec, train)?;
            let mut template = spec_for(first_arch, 0.0, 1);
            if let Some(cal) = config.calibration_optimizer {
                template.optimizer = cal;
            }
            calibrate_lambda(
                &template,
                train,
                group,
                &base_model,
                config.calibration_ratio,
                config.calibration_tolerance,
            )?
        }
    };
    let (lender_lambda, regulator_lambda) = case_lambdas(config.case, lambda);

    let mut rows = Vec::new();
    let mut models = Vec::new();
    let mut keep = |arch: Arch, regime: RegimeLabel, model: &PredictorModel| {
        models.push(FittedRegime {
            arch: arch.label().into(),
            regime: regime.label().into(),
            model: model.clone(),
        });
    };
    for (ai, &arch) in config.archs.iter().enumerate() {
        let arch_slot = 10 + 10 * ai as u64;
        let lender_spec = spec_for(arch, lender_lambda, arch_slot);
        let lender = fit(&lender_spec, train)?;
        let regulator_spec = spec_for(arch, regulator_lambda, arch_slot + 1);
        let regulator = fit(&regulator_spec, train)?;
        rows.push(metrics_row(config, arch, RegimeLabel::Lender, &lender, test, deploy)?);
        keep(arch, RegimeLabel::Lender, &lender);
        rows.push(metrics_row(
            config,
            arch,
            RegimeLabel::Regulator,
            &regulator,
            test,
            deploy,
        )?);
        keep(arch, RegimeLabel::Regulator, &regulator);
        for (label, vars, slot) in [
            (RegimeLabel::PredictionExplainer, &prediction_vars, arch_slot + 2),
            (RegimeLabel::TargetedExplainer, &targeted_vars, arch_slot + 3),
        ] {
            let reference = extract_explanation(&regulator, train, vars)?;
            let mut spec = spec_for(arch, lender_lambda, slot);
            spec.optimizer = constrained_optimizer;
            spec.eta_explainer = config.eta;
            spec.explainer_vars = vars.clone();
            spec.reference_coeffs = reference;
            // Warm start at the lender's unconstrained optimum; the penalty
            // then drags the explanation onto the reference while the model
            // keeps as much of its own objective as it can.
            let constrained = fit_with_init(&spec, train, Some(&lender))?;
            rows.push(metrics_row(config, arch, label, &constrained, test, deploy)?);
            keep(arch, label, &constrained);
        }
    }
    Ok(MetricsReport {
        rows,
        lambda,
        prediction_vars,
        targeted_vars,
        models,
    })
}
