//! JSON schemas for experiments, distributions, regimes, and data configs,
//! with conversions into core types.

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use oversight_core::closed_form::{Scenario, TwoVarParams, TypeJitter};
use oversight_core::datagen::{DgpConfig, ShiftSpec};
use oversight_core::engine::{
    Explainer, ExplainerTargetRule, PolicyRegime, Restriction, RestrictionTargetRule,
    ThresholdRule,
};
use oversight_core::objective::QuadraticObjective;
use oversight_core::scenario::{FiniteMixture, MixtureComponent, ScenarioDistribution};
use oversight_core::signal::{NoiseModel, SignalSpec};
use oversight_core::train::{Arch, MisalignCase, OptimSettings};

/// Row-major dense matrix with explicit dimensions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixDto {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDto {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            bail!(
                "matrix declared {}x{} but carries {} entries",
                self.rows,
                self.cols,
                self.data.len()
            );
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// Two-variable world parameters (mirrors the core struct field-for-field).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TwoVarParamsDto {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub p: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub delta_overall: f64,
    pub delta_hu: f64,
    #[serde(default)]
    pub delta_interaction: f64,
    #[serde(default)]
    pub lambda_eq: f64,
    pub group_means: [f64; 4],
}

impl TwoVarParamsDto {
    pub fn to_core(&self) -> TwoVarParams {
        TwoVarParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
            p: self.p,
            sigma0: self.sigma0,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            sigma3: self.sigma3,
            delta_overall: self.delta_overall,
            delta_hu: self.delta_hu,
            delta_interaction: self.delta_interaction,
            lambda_eq: self.lambda_eq,
            group_means: self.group_means,
        }
    }

    pub fn from_core(p: &TwoVarParams) -> Self {
        Self {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            delta: p.delta,
            p: p.p,
            sigma0: p.sigma0,
            sigma1: p.sigma1,
            sigma2: p.sigma2,
            sigma3: p.sigma3,
            delta_overall: p.delta_overall,
            delta_hu: p.delta_hu,
            delta_interaction: p.delta_interaction,
            lambda_eq: p.lambda_eq,
            group_means: p.group_means,
        }
    }

    pub fn lending_default() -> Self {
        Self::from_core(&TwoVarParams::default())
    }
}

pub fn parse_scenario(s: &str) -> Result<Scenario> {
    Ok(match s {
        "medical" => Scenario::Medical,
        "lending" => Scenario::Lending,
        "hiring" => Scenario::Hiring,
        other => bail!("unknown scenario {other:?} (expected medical|lending|hiring)"),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JitterDto {
    pub sd_overall: f64,
    pub sd_hu: f64,
    #[serde(default)]
    pub sd_interaction: f64,
}

impl JitterDto {
    pub fn to_core(&self) -> TypeJitter {
        TypeJitter {
            sd_overall: self.sd_overall,
            sd_hu: self.sd_hu,
            sd_interaction: self.sd_interaction,
        }
    }
}

/// One finite-mixture atom.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentDto {
    pub probability: f64,
    pub principal_bliss: Vec<f64>,
    pub agent_bliss: Vec<f64>,
    /// Identity when absent.
    #[serde(default)]
    pub principal_weight: Option<MatrixDto>,
    #[serde(default)]
    pub agent_weight: Option<MatrixDto>,
    #[serde(default)]
    pub cell_weights: Option<Vec<f64>>,
}

/// A scenario distribution: explicit mixture or a named generator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionConfig {
    Mixture {
        dim: usize,
        components: Vec<ComponentDto>,
    },
    TwoVar {
        scenario: String,
        params: TwoVarParamsDto,
        #[serde(default)]
        type_jitter: Option<JitterDto>,
    },
}

impl DistributionConfig {
    pub fn to_distribution(&self) -> Result<ScenarioDistribution> {
        match self {
            DistributionConfig::Mixture { dim, components } => {
                let mut comps = Vec::with_capacity(components.len());
                for c in components {
                    let to_weight = |w: &Option<MatrixDto>| -> Result<DMatrix<f64>> {
                        match w {
                            Some(m) => Ok(m.to_matrix()?),
                            None => Ok(DMatrix::identity(*dim, *dim)),
                        }
                    };
                    let principal = QuadraticObjective::new(
                        DVector::from_row_slice(&c.principal_bliss),
                        to_weight(&c.principal_weight)?,
                    )
                    .map_err(|e| anyhow::anyhow!("principal objective: {e}"))?;
                    let agent = QuadraticObjective::new(
                        DVector::from_row_slice(&c.agent_bliss),
                        to_weight(&c.agent_weight)?,
                    )
                    .map_err(|e| anyhow::anyhow!("agent objective: {e}"))?;
                    comps.push(MixtureComponent {
                        probability: c.probability,
                        principal,
                        agent,
                        cell_weights: c.cell_weights.as_ref().map(|v| DVector::from_row_slice(v)),
                    });
                }
                let mixture =
                    FiniteMixture::new(comps).map_err(|e| anyhow::anyhow!("mixture: {e}"))?;
                Ok(ScenarioDistribution::new(Box::new(mixture)))
            }
            DistributionConfig::TwoVar {
                scenario,
                params,
                type_jitter,
            } => {
                let scenario = parse_scenario(scenario)?;
                let world =
                    oversight_core::closed_form::embed_as_general(scenario, &params.to_core())
                        .map_err(|e| anyhow::anyhow!("embedding: {e}"))?;
                let world = match type_jitter {
                    Some(j) => world
                        .with_type_jitter(j.to_core())
                        .map_err(|e| anyhow::anyhow!("jitter: {e}"))?,
                    None => world,
                };
                Ok(world.dist)
            }
        }
    }
}

/// Target rule: a fixed vector or the named optimal rule.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TargetDto {
    Rule(String),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RestrictionDto {
    pub matrix: MatrixDto,
    /// `"principal_mean"` or a fixed vector.
    pub target: TargetDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExplainerDto {
    pub matrix: MatrixDto,
    /// `"principal_draw"` or a fixed vector.
    pub target: TargetDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutcomeRuleDto {
    pub cells: Vec<usize>,
    pub noise_scale: f64,
    pub threshold: f64,
}

/// A labeled regime for general Monte Carlo runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NamedRegime {
    pub name: String,
    #[serde(flatten)]
    pub regime: RegimeConfig,
}

/// Policy-regime document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct RegimeConfig {
    #[serde(default)]
    pub restriction: Option<RestrictionDto>,
    #[serde(default)]
    pub explainer: Option<ExplainerDto>,
    #[serde(default)]
    pub outcome_rule: Option<OutcomeRuleDto>,
}

impl RegimeConfig {
    pub fn to_regime(&self) -> Result<PolicyRegime> {
        let restriction = match &self.restriction {
            None => None,
            Some(r) => {
                let matrix = Restriction::new(r.matrix.to_matrix()?)
                    .map_err(|e| anyhow::anyhow!("restriction: {e}"))?;
                let rule = match &r.target {
                    TargetDto::Fixed(v) => {
                        RestrictionTargetRule::Fixed(DVector::from_row_slice(v))
                    }
                    TargetDto::Rule(name) if name == "principal_mean" => {
                        RestrictionTargetRule::PrincipalMean
                    }
                    TargetDto::Rule(other) => bail!("unknown restriction target rule {other:?}"),
                };
                Some((matrix, rule))
            }
        };
        let explainer = match &self.explainer {
            None => None,
            Some(e) => {
                let matrix = Explainer::new(e.matrix.to_matrix()?)
                    .map_err(|err| anyhow::anyhow!("explainer: {err}"))?;
                let rule = match &e.target {
                    TargetDto::Fixed(v) => ExplainerTargetRule::Fixed(DVector::from_row_slice(v)),
                    TargetDto::Rule(name) if name == "principal_draw" => {
                        ExplainerTargetRule::PrincipalDraw
                    }
                    TargetDto::Rule(other) => bail!("unknown explainer target rule {other:?}"),
                };
                Some((matrix, rule))
            }
        };
        let outcome_rule = self.outcome_rule.as_ref().map(|o| ThresholdRule {
            spec: SignalSpec {
                cells: o.cells.clone(),
                noise: NoiseModel::Gaussian {
                    scale: o.noise_scale,
                },
            },
            threshold: o.threshold,
        });
        Ok(PolicyRegime {
            restriction,
            explainer,
            outcome_rule,
        })
    }
}

/// Data-generating-process document (mirrors the core config).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DgpConfigDto {
    pub n_rows: usize,
    pub n_cols: usize,
    pub true_coefficients: Vec<f64>,
    #[serde(default)]
    pub interactions: Vec<(usize, usize, f64)>,
    pub base_default_rate: f64,
    pub minority_rate: f64,
    #[serde(default)]
    pub minority_shifts: Vec<(usize, f64)>,
    #[serde(default)]
    pub common_factor_loading: f64,
    pub subprime_quantile: f64,
    #[serde(default)]
    pub subprime_index_extra: Vec<(usize, f64)>,
    pub seed: u64,
}

impl DgpConfigDto {
    pub fn to_core(&self) -> DgpConfig {
        DgpConfig {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            true_coefficients: self.true_coefficients.clone(),
            interactions: self.interactions.clone(),
            base_default_rate: self.base_default_rate,
            minority_rate: self.minority_rate,
            minority_shifts: self.minority_shifts.clone(),
            common_factor_loading: self.common_factor_loading,
            subprime_quantile: self.subprime_quantile,
            subprime_index_extra: self.subprime_index_extra.clone(),
            seed: self.seed,
        }
    }

    pub fn from_core(c: &DgpConfig) -> Self {
        Self {
            n_rows: c.n_rows,
            n_cols: c.n_cols,
            true_coefficients: c.true_coefficients.clone(),
            interactions: c.interactions.clone(),
            base_default_rate: c.base_default_rate,
            minority_rate: c.minority_rate,
            minority_shifts: c.minority_shifts.clone(),
            common_factor_loading: c.common_factor_loading,
            subprime_quantile: c.subprime_quantile,
            subprime_index_extra: c.subprime_index_extra.clone(),
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct ShiftSpecDto {
    #[serde(default)]
    pub covariate_mean_shifts: Vec<(usize, f64)>,
    #[serde(default)]
    pub minority_only: bool,
    #[serde(default)]
    pub coefficient_shifts: Vec<(usize, f64)>,
}

impl ShiftSpecDto {
    pub fn to_core(&self) -> ShiftSpec {
        ShiftSpec {
            covariate_mean_shifts: self.covariate_mean_shifts.clone(),
            minority_only: self.minority_only,
            coefficient_shifts: self.coefficient_shifts.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OptimDto {
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_step() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    256
}
fn default_epochs() -> usize {
    200
}

impl Default for OptimDto {
    fn default() -> Self {
        Self {
            step_size: default_step(),
            batch_size: default_batch(),
            epochs: default_epochs(),
        }
    }
}

impl OptimDto {
    pub fn to_core(&self) -> OptimSettings {
        OptimSettings {
            step_size: self.step_size,
            batch_size: self.batch_size,
            epochs: self.epochs,
            ..OptimSettings::default()
        }
    }
}

pub fn parse_case(s: &str) -> Result<MisalignCase> {
    Ok(match s {
        "di" => MisalignCase::DisparateImpact,
        "subprime" => MisalignCase::SubprimeRisk,
        other => bail!("unknown case {other:?} (expected di|subprime)"),
    })
}

pub fn parse_archs(s: &str) -> Result<Vec<Arch>> {
    Ok(match s {
        "logit" => vec![Arch::Logistic],
        "mlp" => vec![Arch::default_mlp()],
        "both" => vec![Arch::default_mlp(), Arch::Logistic],
        other => bail!("unknown architecture {other:?} (expected logit|mlp|both)"),
    })
}

/// Training-experiment document (assembled from CLI flags or JSON).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub case: String,
    /// `logit`, `mlp`, or `both`.
    pub arch: String,
    /// Restrict output rows to these regimes; all four when empty.
    #[serde(default)]
    pub regimes: Vec<String>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_k")]
    pub k_explainer: usize,
    #[serde(default = "default_logit_cols")]
    pub logit_cols: usize,
    #[serde(default)]
    pub optimizer: OptimDto,
    #[serde(default)]
    pub calibration_epochs: Option<usize>,
    pub seed: u64,
    /// Directory containing `train.csv` / `test.csv` (+ sidecars).
    pub data: String,
    /// Optional deployment dataset CSV.
    #[serde(default)]
    pub deploy: Option<String>,
}

fn default_eta() -> f64 {
    50.0
}
fn default_k() -> usize {
    10
}
fn default_logit_cols() -> usize {
    20
}

/// Tolerances for report comparison.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareConfig {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub tol_abs: f64,
    #[serde(default)]
    pub tol_rel: f64,
    /// Column in `b` holding a per-row standard error to scale into the
    /// tolerance.
    #[serde(default)]
    pub se_column: Option<String>,
    #[serde(default = "default_se_factor")]
    pub se_factor: f64,
}

fn default_se_factor() -> f64 {
    3.0
}

/// The experiment document the orchestrator runs and manifests record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    TheoryClosedForm {
        params: TwoVarParamsDto,
        /// Subset of `medical|lending|hiring`; all when empty.
        #[serde(default)]
        scenarios: Vec<String>,
    },
    TheoryMc {
        /// Two-variable world parameters (scenario tables), or...
        #[serde(default)]
        params: Option<TwoVarParamsDto>,
        #[serde(default)]
        scenarios: Vec<String>,
        /// ...a general distribution plus explicit regime documents.
        #[serde(default)]
        distribution: Option<DistributionConfig>,
        #[serde(default)]
        regimes: Vec<NamedRegime>,
        draws: usize,
        seed: u64,
    },
    TheoryConditions {
        distribution: DistributionConfig,
        k: usize,
        n_samples: usize,
        seed: u64,
    },
    TheoryExplainer {
        distribution: DistributionConfig,
        k: usize,
        n_samples: usize,
        seed: u64,
    },
    DataGenerate {
        dgp: DgpConfigDto,
        #[serde(default = "default_fraction")]
        train_fraction: f64,
        split_seed: u64,
    },
    DataShift {
        dgp: DgpConfigDto,
        shift: ShiftSpecDto,
        seed: u64,
    },
    Train(TrainConfig),
    ReportCompare(CompareConfig),
}

fn default_fraction() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::TheoryClosedForm { .. } => "theory-closed-form",
            ExperimentConfig::TheoryMc { .. } => "theory-mc",
            ExperimentConfig::TheoryConditions { .. } => "theory-conditions",
            ExperimentConfig::TheoryExplainer { .. } => "theory-explainer",
            ExperimentConfig::DataGenerate { .. } => "data-generate",
            ExperimentConfig::DataShift { .. } => "data-shift",
            ExperimentConfig::Train(_) => "train",
            ExperimentConfig::ReportCompare(_) => "report-compare",
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {path}"))
}
