//! Analytic welfare oracle for the two-binary-variable world, and its
//! embedding into the general engine.
//!
//! Cells are ordered `(x1, x2) = (0,0), (0,1), (1,0), (1,1)` with weights
//! `mu = (.5(1-p), .5p, .5(1-p), .5p)`. Cell scores are jointly normal with
//! mean given by the coefficients `(alpha, beta, gamma, delta)` of
//! `s(x1, x2) = alpha + beta x1 + gamma x2 + delta x1 x2` and covariance
//!
//! `Sigma = sigma0^2 J + sigma1^2 P1 + sigma2^2 P2 + sigma3^2 I`
//!
//! where `J` is all-ones, `P1` links cells sharing the `x1` value, `P2`
//! links cells sharing the `x2` value, and the ordering
//! `sigma0^2 > sigma1^2 >= sigma2^2 > sigma3^2` is enforced.
//!
//! Three preference stories share this world. In the first two the
//! principal's bliss is the realized score vector; the agent's is shifted by
//! a fixed distortion (an overall shift, optionally plus a shift on the
//! high-`x2` cells). In the third the agent fits scores while the principal
//! additionally dislikes squared disparity in group-conditional means, which
//! folds into a rank-one weight term and a shifted bliss by completing the
//! square. Welfare is measured relative to the principal's own bliss
//! (`-(f - w_bar)' Omega_W (f - w_bar)`), so the first best is exactly zero
//! in every scenario.

use alloc::{boxed::Box, format, vec};
use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_core::RngCore;
use rand_distr::StandardNormal;

use crate::engine::{Explainer, PolicyRegime, Restriction, ThresholdRule};
use crate::fmath::abs;
use crate::linalg;
use crate::objective::QuadraticObjective;
use crate::scenario::{
    DeploymentParams, ScenarioDistribution, ScenarioDraw, ScenarioModel, ScenarioMoments,
    TrainingState,
};
use crate::signal::{NoiseModel, SignalSpec};
use crate::{Error, Result};

/// Which preference story the two-variable world tells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Agent over-predicts on average (overall shift only).
    Medical,
    /// Agent shifts scores overall and for high-`x2` cells.
    Lending,
    /// Agent fits scores; principal also penalizes group disparity.
    Hiring,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Medical, Scenario::Lending, Scenario::Hiring];

    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Medical => "medical",
            Scenario::Lending => "lending",
            Scenario::Hiring => "hiring",
        }
    }
}

/// The five policy regimes of the two-variable world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    NoRegulation,
    ExAnteRestriction,
    OutcomeAudit,
    PredictionExplainerAudit,
    TargetedExplainerAudit,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 5] = [
        RegimeTag::NoRegulation,
        RegimeTag::ExAnteRestriction,
        RegimeTag::OutcomeAudit,
        RegimeTag::PredictionExplainerAudit,
        RegimeTag::TargetedExplainerAudit,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RegimeTag::NoRegulation => "no_regulation",
            RegimeTag::ExAnteRestriction => "ex_ante_restriction",
            RegimeTag::OutcomeAudit => "outcome_audit",
            RegimeTag::PredictionExplainerAudit => "prediction_explainer",
            RegimeTag::TargetedExplainerAudit => "targeted_explainer",
        }
    }
}

/// Parameters of the two-variable world.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoVarParams {
    /// Mean score coefficients.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// `P(x2 = 1)`; must differ from 0.5 so the two splits are distinguishable.
    pub p: f64,
    /// Covariance scales (standard deviations, squared internally).
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Agent distortions (ignored by the hiring scenario).
    pub delta_overall: f64,
    pub delta_hu: f64,
    pub delta_interaction: f64,
    /// Principal's disparity weight (hiring scenario only).
    pub lambda_eq: f64,
    /// Minority share per cell, ordered like the cells; must depend on `x2`
    /// only (cells 0 and 2 equal, cells 1 and 3 equal).
    pub group_means: [f64; 4],
}

impl Default for TwoVarParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.5,
            gamma: 0.4,
            delta: 0.2,
            p: 0.3,
            sigma0: 2.0,
            sigma1: 1.2,
            sigma2: 1.1,
            sigma3: 0.5,
            delta_overall: 0.1,
            delta_hu: 0.2,
            delta_interaction: 0.0,
            lambda_eq: 1.0,
            group_means: [0.3, 0.15, 0.3, 0.15],
        }
    }
}

impl TwoVarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("p = {} not in (0, 1)", self.p)));
        }
        if abs(self.p - 0.5) <= 1e-9 {
            return Err(Error::InvalidParameter("p must differ from 0.5".into()));
        }
        for (name, s) in [
            ("sigma0", self.sigma0),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("sigma3", self.sigma3),
        ] {
            if !(s >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {s} must be >= 0")));
            }
        }
        if !(self.lambda_eq >= 0.0) {
            return Err(Error::InvalidParameter("lambda_eq must be >= 0".into()));
        }
        Ok(())
    }

    fn validate_hiring_groups(&self) -> Result<()> {
        for r in self.group_means {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "group share {r} not in (0, 1)"
                )));
            }
        }
        if abs(self.group_means[0] - self.group_means[2]) > 1e-12
            || abs(self.group_means[1] - self.group_means[3]) > 1e-12
        {
            return Err(Error::InvalidParameter(
                "group shares must depend on x2 only (cells 0/2 and 1/3 must match)".into(),
            ));
        }
        Ok(())
    }

    /// Mean cell-score vector implied by the coefficients.
    pub fn mean_scores(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.alpha,
            self.alpha + self.gamma,
            self.alpha + self.beta,
            self.alpha + self.beta + self.gamma + self.delta,
        ])
    }

    /// Cell weights `mu`.
    pub fn cell_weights(&self) -> DVector<f64> {
        let p = self.p;
        DVector::from_vec(vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * (1.0 - p), 0.5 * p])
    }
}

const X2_CELLS: [f64; 4] = [0.0, 1.0, 0.0, 1.0];
const X1_CELLS: [f64; 4] = [0.0, 0.0, 1.0, 1.0];
const X1X2_CELLS: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn x2_vec() -> DVector<f64> {
    DVector::from_row_slice(&X2_CELLS)
}

fn x1x2_vec() -> DVector<f64> {
    DVector::from_row_slice(&X1X2_CELLS)
}

/// `Sigma` from the four scale parameters; errors unless
/// `sigma0^2 > sigma1^2 >= sigma2^2 > sigma3^2`.
pub fn build_sigma(params: &TwoVarParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let (s0, s1, s2, s3) = (
        params.sigma0 * params.sigma0,
        params.sigma1 * params.sigma1,
        params.sigma2 * params.sigma2,
        params.sigma3 * params.sigma3,
    );
    if !(s0 > s1 && s1 >= s2 && s2 > s3) {
        return Err(Error::InvalidParameter(format!(
            "covariance ordering violated: need sigma0^2 > sigma1^2 >= sigma2^2 > sigma3^2, \
             got ({s0}, {s1}, {s2}, {s3})"
        )));
    }
    let mut sigma = DMatrix::from_element(4, 4, s0);
    for i in 0..4 {
        for j in 0..4 {
            if X1_CELLS[i] == X1_CELLS[j] {
                sigma[(i, j)] += s1;
            }
            if X2_CELLS[i] == X2_CELLS[j] {
                sigma[(i, j)] += s2;
            }
        }
        sigma[(i, i)] += s3;
    }
    Ok(sigma)
}

/// Variance of a linear functional `c' s` of the cell scores.
fn functional_variance(sigma: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    (c.transpose() * sigma * c)[(0, 0)]
}

/// The `x2`-effect functional `E[s | x2=1] - E[s | x2=0]` (realizes
/// `gamma + delta/2` at the mean coefficients).
fn x2_effect_functional() -> DVector<f64> {
    DVector::from_vec(vec![-0.5, 0.5, -0.5, 0.5])
}

/// Group-contrast functional `g` with `g' f = E[f | G=0] - E[f | G=1]`.
fn group_contrast(params: &TwoVarParams) -> DVector<f64> {
    let mu = params.cell_weights();
    let rho = params.group_means;
    let rho_bar: f64 = (0..4).map(|c| mu[c] * rho[c]).sum();
    DVector::from_fn(4, |c, _| {
        mu[c] * ((1.0 - rho[c]) / (1.0 - rho_bar) - rho[c] / rho_bar)
    })
}

struct HiringParts {
    omega_w: DMatrix<f64>,
    /// `w_bar = bliss_map * s`.
    bliss_map: DMatrix<f64>,
    g: DVector<f64>,
    /// `q = g' D^{-1} g`.
    q: f64,
}

fn hiring_parts(params: &TwoVarParams) -> Result<HiringParts> {
    params.validate_hiring_groups()?;
    let mu = params.cell_weights();
    let d = DMatrix::from_diagonal(&mu);
    let g = group_contrast(params);
    let q: f64 = (0..4).map(|c| g[c] * g[c] / mu[c]).sum();
    let lambda = params.lambda_eq;
    let omega_w = &d + lambda * &g * g.transpose();
    // (D + lambda g g')^{-1} D via Sherman-Morrison.
    let d_inv_g = DVector::from_fn(4, |c, _| g[c] / mu[c]);
    let correction = lambda / (1.0 + lambda * q) * &d_inv_g * (g.transpose());
    let bliss_map = DMatrix::identity(4, 4) - correction;
    Ok(HiringParts {
        omega_w: linalg::symmetrize(&omega_w),
        bliss_map,
        g,
        q,
    })
}

/// Expected welfare in closed form for a scenario and regime. Welfare is
/// centered at the principal's bliss, matching the engine's convention, so
/// the targeted-audit value is exactly zero.
pub fn closed_form_welfare(scenario: Scenario, tag: RegimeTag, params: &TwoVarParams) -> Result<f64> {
    params.validate()?;
    if tag == RegimeTag::OutcomeAudit {
        return Err(Error::InvalidParameter(
            "no closed form for the outcome-audit regime; see the outcome audit demonstration"
                .into(),
        ));
    }
    let p = params.p;
    let mu = params.cell_weights();
    match scenario {
        Scenario::Medical => {
            let d_o = params.delta_overall;
            match tag {
                RegimeTag::NoRegulation => Ok(-d_o * d_o),
                RegimeTag::ExAnteRestriction => {
                    let sigma = build_sigma(params)?;
                    Ok(-functional_variance(&sigma, &mu))
                }
                RegimeTag::PredictionExplainerAudit | RegimeTag::TargetedExplainerAudit => Ok(0.0),
                RegimeTag::OutcomeAudit => unreachable!(),
            }
        }
        Scenario::Lending => {
            if params.delta_interaction != 0.0 {
                return Err(Error::InvalidParameter(
                    "closed forms cover the two-dimensional distortion only \
                     (delta_interaction must be 0)"
                        .into(),
                ));
            }
            let (d_o, d_hu) = (params.delta_overall, params.delta_hu);
            match tag {
                RegimeTag::NoRegulation => {
                    let m = d_o + p * d_hu;
                    Ok(-(m * m) - p * (1.0 - p) * d_hu * d_hu)
                }
                RegimeTag::ExAnteRestriction => {
                    let sigma = build_sigma(params)?;
                    let var_mean = functional_variance(&sigma, &mu);
                    let var_z = functional_variance(&sigma, &x2_effect_functional());
                    Ok(-(var_mean + p * (1.0 - p) * var_z))
                }
                RegimeTag::PredictionExplainerAudit => Ok(-p * (1.0 - p) * d_hu * d_hu),
                RegimeTag::TargetedExplainerAudit => Ok(0.0),
                RegimeTag::OutcomeAudit => unreachable!(),
            }
        }
        Scenario::Hiring => {
            let parts = hiring_parts(params)?;
            let lambda = params.lambda_eq;
            let shrink = 1.0 + lambda * parts.q;
            match tag {
                RegimeTag::NoRegulation | RegimeTag::PredictionExplainerAudit => {
                    let sigma = build_sigma(params)?;
                    let disp_mean = (parts.g.transpose() * params.mean_scores())[(0, 0)];
                    let e_disp_sq = disp_mean * disp_mean + functional_variance(&sigma, &parts.g);
                    Ok(-(lambda * lambda * parts.q / shrink) * e_disp_sq)
                }
                RegimeTag::ExAnteRestriction => {
                    let sigma = build_sigma(params)?;
                    let var_z = functional_variance(&sigma, &x2_effect_functional());
                    Ok(-p * (1.0 - p) * var_z / shrink)
                }
                RegimeTag::TargetedExplainerAudit => Ok(0.0),
                RegimeTag::OutcomeAudit => unreachable!(),
            }
        }
    }
}

/// Per-draw jitter on the agent's distortion coefficients; makes the
/// misalignment span genuinely multi-dimensional across draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeJitter {
    pub sd_overall: f64,
    pub sd_hu: f64,
    pub sd_interaction: f64,
}

struct TwoVarModel {
    scenario: Scenario,
    s_mean: DVector<f64>,
    /// `s = s_mean + transform * eps` with standard normal `eps`.
    sample_transform: DMatrix<f64>,
    mu: DVector<f64>,
    d_weight: DMatrix<f64>,
    base_deltas: DVector<f64>,
    type_jitter: Option<TypeJitter>,
    deployment_noise_sd: f64,
    hiring: Option<HiringParts>,
    moments: ScenarioMoments,
}

impl TwoVarModel {
    fn delta_vector(coeffs: &DVector<f64>) -> DVector<f64> {
        let ones = DVector::from_element(4, 1.0);
        coeffs[0] * ones + coeffs[1] * x2_vec() + coeffs[2] * x1x2_vec()
    }

    fn new(
        scenario: Scenario,
        params: TwoVarParams,
        type_jitter: Option<TypeJitter>,
        deployment_noise_sd: f64,
    ) -> Result<Self> {
        params.validate()?;
        let sigma = build_sigma(&params)?;
        let (vals, vecs) = linalg::sym_eigen_desc(&sigma);
        let mut sample_transform = DMatrix::zeros(4, 4);
        for j in 0..4 {
            let s = crate::fmath::sqrt(vals[j].max(0.0));
            for i in 0..4 {
                sample_transform[(i, j)] = vecs[(i, j)] * s;
            }
        }
        let s_mean = params.mean_scores();
        let mu = params.cell_weights();
        let d_weight = DMatrix::from_diagonal(&mu);
        let base_deltas = match scenario {
            Scenario::Medical => DVector::from_vec(vec![params.delta_overall, 0.0, 0.0]),
            Scenario::Lending => DVector::from_vec(vec![
                params.delta_overall,
                params.delta_hu,
                params.delta_interaction,
            ]),
            Scenario::Hiring => DVector::zeros(3),
        };
        let hiring = match scenario {
            Scenario::Hiring => Some(hiring_parts(&params)?),
            _ => None,
        };

        // Analytic moments.
        let moments = match &hiring {
            None => {
                let mean_gap = Self::delta_vector(&base_deltas);
                let mut m2 = &mean_gap * mean_gap.transpose();
                if let Some(j) = &type_jitter {
                    let ones = DVector::from_element(4, 1.0);
                    m2 += j.sd_overall * j.sd_overall * &ones * ones.transpose();
                    let x2 = x2_vec();
                    m2 += j.sd_hu * j.sd_hu * &x2 * x2.transpose();
                    let x1x2 = x1x2_vec();
                    m2 += j.sd_interaction * j.sd_interaction * &x1x2 * x1x2.transpose();
                }
                ScenarioMoments {
                    mean_principal_bliss: s_mean.clone(),
                    var_principal_bliss: sigma.clone(),
                    second_moment_gap: linalg::symmetrize(&m2),
                    mean_gap,
                }
            }
            Some(h) => {
                let mean_w = &h.bliss_map * &s_mean;
                let var_w = &h.bliss_map * &sigma * h.bliss_map.transpose();
                // gap = u_bar - w_bar = lambda (g's) Omega_W^{-1} g, and
                // Omega_W^{-1} g = D^{-1} g / (1 + lambda q).
                let lambda = params.lambda_eq;
                let h_dir = DVector::from_fn(4, |c, _| {
                    lambda * h.g[c] / mu[c] / (1.0 + lambda * h.q)
                });
                let disp_mean = (h.g.transpose() * &s_mean)[(0, 0)];
                let e_disp_sq = disp_mean * disp_mean + functional_variance(&sigma, &h.g);
                let mean_gap = disp_mean * &h_dir;
                let m2 = e_disp_sq * &h_dir * h_dir.transpose();
                ScenarioMoments {
                    mean_principal_bliss: mean_w,
                    var_principal_bliss: linalg::symmetrize(&var_w),
                    second_moment_gap: linalg::symmetrize(&m2),
                    mean_gap,
                }
            }
        };

        Ok(Self {
            scenario,
            s_mean,
            sample_transform,
            mu,
            d_weight,
            base_deltas,
            type_jitter,
            deployment_noise_sd,
            hiring,
            moments,
        })
    }

    fn scores_of<'a>(&self, draw: &'a ScenarioDraw) -> &'a DVector<f64> {
        &draw.training_state.params
    }
}

impl ScenarioModel for TwoVarModel {
    fn dim(&self) -> usize {
        4
    }

    fn sample(&self, rng: &mut dyn RngCore) -> ScenarioDraw {
        let eps = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = &self.s_mean + &self.sample_transform * eps;
        let mut deltas = self.base_deltas.clone();
        if let Some(j) = &self.type_jitter {
            deltas[0] += j.sd_overall * rng.sample::<f64, _>(StandardNormal);
            deltas[1] += j.sd_hu * rng.sample::<f64, _>(StandardNormal);
            deltas[2] += j.sd_interaction * rng.sample::<f64, _>(StandardNormal);
        }
        let deployment = if self.deployment_noise_sd > 0.0 {
            let shock =
                DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal))
                    * self.deployment_noise_sd;
            &s + shock
        } else {
            s.clone()
        };
        ScenarioDraw {
            training_state: TrainingState { id: 0, params: s },
            deployment: DeploymentParams {
                params: deployment,
                cell_weights: self.mu.clone(),
            },
            agent_type: deltas,
        }
    }

    fn principal_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective {
        let s = self.scores_of(draw);
        match &self.hiring {
            None => QuadraticObjective::new_unchecked(s.clone(), self.d_weight.clone()),
            Some(h) => {
                QuadraticObjective::new_unchecked(&h.bliss_map * s, h.omega_w.clone())
            }
        }
    }

    fn agent_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective {
        let s = self.scores_of(draw);
        let u_bar = match self.scenario {
            Scenario::Hiring => s.clone(),
            _ => s + Self::delta_vector(&draw.agent_type),
        };
        QuadraticObjective::new_unchecked(u_bar, self.d_weight.clone())
    }

    fn moments(&self) -> Option<ScenarioMoments> {
        Some(self.moments.clone())
    }

    fn fixed_agent_weight(&self) -> Option<DMatrix<f64>> {
        Some(self.d_weight.clone())
    }

    fn fixed_principal_weight(&self) -> Option<DMatrix<f64>> {
        Some(match &self.hiring {
            None => self.d_weight.clone(),
            Some(h) => h.omega_w.clone(),
        })
    }
}

/// The two-variable world embedded into the general engine: a scenario
/// distribution plus the regime definitions the closed forms describe.
pub struct TwoVarWorld {
    pub dist: ScenarioDistribution,
    scenario: Scenario,
    params: TwoVarParams,
}

impl TwoVarWorld {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn params(&self) -> &TwoVarParams {
        &self.params
    }

    fn row(weights: [f64; 4]) -> RowDVector<f64> {
        RowDVector::from_row_slice(&weights)
    }

    fn mean_row(&self) -> RowDVector<f64> {
        let mu = self.params.cell_weights();
        Self::row([mu[0], mu[1], mu[2], mu[3]])
    }

    fn x1_split_rows(&self) -> DMatrix<f64> {
        let mu = self.params.cell_weights();
        // E[f | x1 = 0] and E[f | x1 = 1]; each x1 group has mass 1/2.
        DMatrix::from_rows(&[
            Self::row([2.0 * mu[0], 2.0 * mu[1], 0.0, 0.0]),
            Self::row([0.0, 0.0, 2.0 * mu[2], 2.0 * mu[3]]),
        ])
    }

    fn x2_split_rows(&self) -> DMatrix<f64> {
        let mu = self.params.cell_weights();
        let p = self.params.p;
        DMatrix::from_rows(&[
            Self::row([mu[0] / (1.0 - p), 0.0, mu[2] / (1.0 - p), 0.0]),
            Self::row([0.0, mu[1] / p, 0.0, mu[3] / p]),
        ])
    }

    fn x2_effect_row(&self) -> DMatrix<f64> {
        let split = self.x2_split_rows();
        DMatrix::from_rows(&[RowDVector::from_fn(4, |_, c| split[(1, c)] - split[(0, c)])])
    }

    /// The best-prediction explanation mapping of this world: the split along
    /// the (more even) `x1` dimension.
    pub fn prediction_explainer(&self) -> Result<Explainer> {
        Explainer::new(self.x1_split_rows())
    }

    /// The misalignment-targeted explanation mapping per scenario.
    pub fn targeted_explainer(&self) -> Result<Explainer> {
        let rows = match self.scenario {
            Scenario::Medical => DMatrix::from_rows(&[self.mean_row()]),
            Scenario::Lending => self.x2_split_rows(),
            Scenario::Hiring => self.x2_effect_row(),
        };
        Explainer::new(rows)
    }

    fn restriction(&self) -> Result<Restriction> {
        let rows = match self.scenario {
            Scenario::Medical => DMatrix::from_rows(&[self.mean_row()]),
            Scenario::Lending => {
                let eff = self.x2_effect_row();
                DMatrix::from_rows(&[self.mean_row(), eff.row(0).into_owned()])
            }
            Scenario::Hiring => self.x2_effect_row(),
        };
        Restriction::new(rows)
    }

    /// Default outcome-audit rule: mean realized shortfall on the high-`x2`
    /// cells with Gaussian reporting noise.
    pub fn outcome_rule(&self, threshold: f64, noise_scale: f64) -> ThresholdRule {
        ThresholdRule {
            spec: SignalSpec {
                cells: vec![1, 3],
                noise: NoiseModel::Gaussian { scale: noise_scale },
            },
            threshold,
        }
    }

    /// The policy regime a tag denotes.
    pub fn regime(&self, tag: RegimeTag) -> Result<PolicyRegime> {
        Ok(match tag {
            RegimeTag::NoRegulation => PolicyRegime::no_regulation(),
            RegimeTag::ExAnteRestriction => PolicyRegime::ex_ante(self.restriction()?),
            RegimeTag::OutcomeAudit => PolicyRegime::outcome_audit(self.outcome_rule(0.5, 0.1)),
            RegimeTag::PredictionExplainerAudit => {
                PolicyRegime::explainer_audit(self.prediction_explainer()?)
            }
            RegimeTag::TargetedExplainerAudit => {
                PolicyRegime::explainer_audit(self.targeted_explainer()?)
            }
        })
    }

    /// Rebuilds the world with per-draw jitter on the distortion
    /// coefficients.
    pub fn with_type_jitter(&self, jitter: TypeJitter) -> Result<Self> {
        let model = TwoVarModel::new(self.scenario, self.params.clone(), Some(jitter), 0.0)?;
        Ok(Self {
            dist: ScenarioDistribution::new(Box::new(model)),
            scenario: self.scenario,
            params: self.params.clone(),
        })
    }

    /// Rebuilds the world with deployment-stage parameter noise (the
    /// deployment scores differ from the training signal).
    pub fn with_deployment_noise(&self, sd: f64) -> Result<Self> {
        let model = TwoVarModel::new(self.scenario, self.params.clone(), None, sd)?;
        Ok(Self {
            dist: ScenarioDistribution::new(Box::new(model)),
            scenario: self.scenario,
            params: self.params.clone(),
        })
    }
}

/// Embeds the two-variable world into the general engine.
pub fn embed_as_general(scenario: Scenario, params: &TwoVarParams) -> Result<TwoVarWorld> {
    let model = TwoVarModel::new(scenario, params.clone(), None, 0.0)?;
    Ok(TwoVarWorld {
        dist: ScenarioDistribution::new(Box::new(model)),
        scenario,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_identity_and_common_factor_cases() {
        // Only the idiosyncratic term: Sigma = I. The ordering check must be
        // bypassed for degenerate cases, so test through the raw pattern.
        let mut p = TwoVarParams::default();
        p.sigma0 = 2.0;
        p.sigma1 = 0.0;
        p.sigma2 = 0.0;
        p.sigma3 = 0.0;
        // ordering violated (sigma1 == sigma2 allowed, but sigma2 > sigma3
        // fails): expect an error rather than a silent matrix.
        assert!(build_sigma(&p).is_err());
    }

    #[test]
    fn sigma_pattern_matches_hand_sum() {
        let p = TwoVarParams {
            sigma0: 2.0,
            sigma1: 1.2,
            sigma2: 1.1,
            sigma3: 0.5,
            ..TwoVarParams::default()
        };
        let sigma = build_sigma(&p).unwrap();
        assert_abs_diff_eq!(sigma[(0, 0)], 4.0 + 1.44 + 1.21 + 0.25, epsilon = 1e-12);
        // Cells 0 and 1 share the x1 value.
        assert_abs_diff_eq!(sigma[(0, 1)], 4.0 + 1.44, epsilon = 1e-12);
        // Cells 0 and 2 share the x2 value.
        assert_abs_diff_eq!(sigma[(0, 2)], 4.0 + 1.21, epsilon = 1e-12);
        // Cells 0 and 3 share nothing beyond the common factor.
        assert_abs_diff_eq!(sigma[(0, 3)], 4.0, epsilon = 1e-12);
        linalg::check_psd(&sigma, 1e-10).unwrap();
    }

    #[test]
    fn lending_closed_forms_match_hand_values() {
        let params = TwoVarParams {
            delta_overall: 0.1,
            delta_hu: 0.2,
            p: 0.3,
            ..TwoVarParams::default()
        };
        let no_reg =
            closed_form_welfare(Scenario::Lending, RegimeTag::NoRegulation, &params).unwrap();
        assert_abs_diff_eq!(no_reg, -0.0340, epsilon = 1e-12);
        let pred = closed_form_welfare(
            Scenario::Lending,
            RegimeTag::PredictionExplainerAudit,
            &params,
        )
        .unwrap();
        assert_abs_diff_eq!(pred, -0.0084, epsilon = 1e-12);
        let targeted = closed_form_welfare(
            Scenario::Lending,
            RegimeTag::TargetedExplainerAudit,
            &params,
        )
        .unwrap();
        assert_abs_diff_eq!(targeted, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lending_welfare_monotone_across_audits() {
        let params = TwoVarParams::default();
        let no_reg =
            closed_form_welfare(Scenario::Lending, RegimeTag::NoRegulation, &params).unwrap();
        let pred = closed_form_welfare(
            Scenario::Lending,
            RegimeTag::PredictionExplainerAudit,
            &params,
        )
        .unwrap();
        let tgt = closed_form_welfare(
            Scenario::Lending,
            RegimeTag::TargetedExplainerAudit,
            &params,
        )
        .unwrap();
        assert!(no_reg.abs() >= pred.abs() && pred.abs() >= tgt.abs());
    }

    #[test]
    fn outcome_audit_has_no_closed_form() {
        let params = TwoVarParams::default();
        assert!(matches!(
            closed_form_welfare(Scenario::Lending, RegimeTag::OutcomeAudit, &params),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn aligned_world_first_best_under_audit_regimes() {
        let params = TwoVarParams {
            delta_overall: 0.0,
            delta_hu: 0.0,
            ..TwoVarParams::default()
        };
        for scenario in [Scenario::Medical, Scenario::Lending] {
            let world = embed_as_general(scenario, &params).unwrap();
            for tag in [
                RegimeTag::NoRegulation,
                RegimeTag::PredictionExplainerAudit,
                RegimeTag::TargetedExplainerAudit,
            ] {
                let regime = world.regime(tag).unwrap();
                let (mean, _) = engine::expected_welfare(&regime, &world.dist, 500, 7).unwrap();
                assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hiring_lambda_zero_reduces_to_pure_fit() {
        let params = TwoVarParams {
            lambda_eq: 0.0,
            ..TwoVarParams::default()
        };
        let world = embed_as_general(Scenario::Hiring, &params).unwrap();
        for tag in [
            RegimeTag::NoRegulation,
            RegimeTag::PredictionExplainerAudit,
            RegimeTag::TargetedExplainerAudit,
        ] {
            let cf = closed_form_welfare(Scenario::Hiring, tag, &params).unwrap();
            assert_abs_diff_eq!(cf, 0.0, epsilon = 1e-14);
            let regime = world.regime(tag).unwrap();
            let (mean, _) = engine::expected_welfare(&regime, &world.dist, 500, 7).unwrap();
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
        }
        // The restriction still incurs its variance cost.
        let cf = closed_form_welfare(Scenario::Hiring, RegimeTag::ExAnteRestriction, &params)
            .unwrap();
        let sigma = build_sigma(&params).unwrap();
        let var_z = functional_variance(&sigma, &x2_effect_functional());
        assert_abs_diff_eq!(cf, -params.p * (1.0 - params.p) * var_z, epsilon = 1e-12);
    }

    #[test]
    fn lending_interaction_rejected_by_oracle_but_not_engine() {
        let params = TwoVarParams {
            delta_interaction: 0.3,
            ..TwoVarParams::default()
        };
        assert!(closed_form_welfare(Scenario::Lending, RegimeTag::NoRegulation, &params).is_err());
        assert!(embed_as_general(Scenario::Lending, &params).is_ok());
    }

    #[test]
    fn embedding_moments_match_empirical() {
        let params = TwoVarParams::default();
        let world = embed_as_general(Scenario::Lending, &params).unwrap();
        let analytic = world.dist.moments().unwrap();
        let n = 200_000;
        let mut mean = DVector::zeros(4);
        for d in world.dist.draws(3).take(n) {
            mean += &d.training_state.params;
        }
        mean /= n as f64;
        for i in 0..4 {
            let se = crate::fmath::sqrt(analytic.var_principal_bliss[(i, i)] / n as f64);
            assert!(
                abs(mean[i] - analytic.mean_principal_bliss[i]) <= 4.0 * se,
                "cell {i}"
            );
        }
    }

    #[test]
    fn jittered_lending_gap_has_rank_two() {
        let params = TwoVarParams::default();
        let world = embed_as_general(Scenario::Lending, &params)
            .unwrap()
            .with_type_jitter(TypeJitter {
                sd_overall: 0.2,
                sd_hu: 0.3,
                sd_interaction: 0.0,
            })
            .unwrap();
        let m = world.dist.misalignment_moments(0, 0).unwrap();
        assert_eq!(m.rank_gap, 2);
        // Eigen-oracle: the analytic second moment diagonalizes with exactly
        // two eigenvalues above threshold.
        let (vals, _) = linalg::sym_eigen_desc(&m.second_moment_gap);
        assert!(vals[1] > 1e-8 * vals[0]);
        assert!(vals[2] <= 1e-8 * vals[0]);
    }

    #[test]
    fn hiring_gap_is_rank_one_along_x2_contrast() {
        let params = TwoVarParams::default();
        let world = embed_as_general(Scenario::Hiring, &params).unwrap();
        let m = world.dist.misalignment_moments(0, 0).unwrap();
        assert_eq!(m.rank_gap, 1);
        // The gap direction is proportional to x2 - p (centered contrast).
        let (vals, vecs) = linalg::sym_eigen_desc(&m.second_moment_gap);
        assert!(vals[0] > 0.0);
        let dir = vecs.column(0).into_owned();
        let centered = x2_vec() - DVector::from_element(4, params.p);
        let cosine = (dir.transpose() * &centered)[(0, 0)] / (dir.norm() * centered.norm());
        assert_abs_diff_eq!(abs(cosine), 1.0, epsilon = 1e-10);
    }
}
