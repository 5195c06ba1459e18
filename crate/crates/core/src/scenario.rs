//! States, types, and the joint distribution they are drawn from.
//!
//! A [`ScenarioModel`] couples a seeded sampler of [`ScenarioDraw`]s with the
//! conditional quadratic objectives they induce for principal and agent, and
//! optionally exposes analytic first/second moments. [`ScenarioDistribution`]
//! wraps a model and provides the moment queries every decision rule needs:
//! the variance of the principal's conditional bliss and the second moment of
//! the principal-agent bliss gap.

use alloc::{boxed::Box, format, vec::Vec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_core::RngCore;

use crate::fmath::abs;
use crate::linalg::{self, RANK_EIG_TOL};
use crate::objective::QuadraticObjective;
use crate::rng::rng_from;
use crate::{Error, Result};

/// The training signal: an opaque identifier plus the revealed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub id: u64,
    pub params: DVector<f64>,
}

/// Deployment-stage parameters: realized outcome parameters plus the
/// probability weights over population cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentParams {
    pub params: DVector<f64>,
    pub cell_weights: DVector<f64>,
}

impl DeploymentParams {
    /// Validates the cell-weight simplex: entries `>= 0`, sum `1 +- 1e-10`.
    pub fn new(params: DVector<f64>, cell_weights: DVector<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for &w in cell_weights.iter() {
            if !(w >= 0.0) {
                return Err(Error::InvalidProbabilities(format!(
                    "negative cell weight {w}"
                )));
            }
            sum += w;
        }
        if abs(sum - 1.0) > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "cell weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { params, cell_weights })
    }
}

/// One joint draw of training state, deployment state, and agent type.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDraw {
    pub training_state: TrainingState,
    pub deployment: DeploymentParams,
    pub agent_type: DVector<f64>,
}

/// Analytic moments of the conditional blisses under the distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMoments {
    /// `E[w_bar]`.
    pub mean_principal_bliss: DVector<f64>,
    /// `Var(w_bar)`.
    pub var_principal_bliss: DMatrix<f64>,
    /// `E[(u_bar - w_bar)(u_bar - w_bar)']`.
    pub second_moment_gap: DMatrix<f64>,
    /// `E[u_bar - w_bar]`.
    pub mean_gap: DVector<f64>,
}

/// Sample variance of the principal bliss, second moment of the bliss gap,
/// and the numerical rank of the latter.
#[derive(Debug, Clone, PartialEq)]
pub struct MisalignmentMoments {
    pub var_principal_bliss: DMatrix<f64>,
    pub second_moment_gap: DMatrix<f64>,
    pub rank_gap: usize,
}

/// A joint distribution over `(s, d, theta)` together with the conditional
/// objectives it induces.
pub trait ScenarioModel {
    /// Dimension of the prediction-function space.
    fn dim(&self) -> usize;

    /// Draws one scenario; all randomness comes from `rng`.
    fn sample(&self, rng: &mut dyn RngCore) -> ScenarioDraw;

    /// Conditional principal objective `(w_bar(s), Omega_W_bar(s))`.
    fn principal_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective;

    /// Conditional agent objective `(u_bar(s, theta), Omega_U_bar(s, theta))`.
    fn agent_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective;

    /// Analytic moments, when the representation supports them.
    fn moments(&self) -> Option<ScenarioMoments> {
        None
    }

    /// The agent weight matrix when it is constant across draws.
    fn fixed_agent_weight(&self) -> Option<DMatrix<f64>> {
        None
    }

    /// The principal weight matrix when it is constant across draws.
    fn fixed_principal_weight(&self) -> Option<DMatrix<f64>> {
        None
    }
}

/// A seeded scenario distribution (the object the engine consumes).
pub struct ScenarioDistribution {
    model: Box<dyn ScenarioModel + Send + Sync>,
}

impl ScenarioDistribution {
    pub fn new(model: Box<dyn ScenarioModel + Send + Sync>) -> Self {
        Self { model }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn model(&self) -> &(dyn ScenarioModel + Send + Sync) {
        &*self.model
    }

    /// Deterministic draw stream for a seed; equal seeds give identical
    /// sequences.
    pub fn draws(&self, seed: u64) -> DrawIter<'_> {
        DrawIter {
            model: &*self.model,
            rng: rng_from(seed),
        }
    }

    pub fn moments(&self) -> Option<ScenarioMoments> {
        self.model.moments()
    }

    /// Weight shared by principal and agent when both are fixed and equal.
    pub fn fixed_common_weight(&self) -> Option<DMatrix<f64>> {
        let u = self.model.fixed_agent_weight()?;
        let w = self.model.fixed_principal_weight()?;
        if linalg::max_abs(&(&u - &w)) <= 1e-10 * (1.0 + linalg::max_abs(&u)) {
            Some(u)
        } else {
            None
        }
    }

    /// Variance of `w_bar`, second moment of the bliss gap, and its numerical
    /// rank (threshold `1e-8` relative to the largest eigenvalue). Uses
    /// analytic moments when the model provides them, otherwise `n_samples`
    /// Monte Carlo draws from `seed`.
    pub fn misalignment_moments(
        &self,
        n_samples: usize,
        seed: u64,
    ) -> Result<MisalignmentMoments> {
        let (var, m2) = match self.model.moments() {
            Some(m) => (m.var_principal_bliss, m.second_moment_gap),
            None => {
                if n_samples < 2 {
                    return Err(Error::InvalidData(
                        "misalignment moments need at least 2 samples".into(),
                    ));
                }
                let n = self.dim();
                let mut sum_w = DVector::zeros(n);
                let mut sum_ww = DMatrix::zeros(n, n);
                let mut sum_gg = DMatrix::zeros(n, n);
                let mut count = 0usize;
                for draw in self.draws(seed).take(n_samples) {
                    let w = self.model.principal_objective(&draw);
                    let u = self.model.agent_objective(&draw);
                    let wb = w.bliss();
                    let gap = u.bliss() - wb;
                    sum_w += wb;
                    sum_ww += wb * wb.transpose();
                    sum_gg += &gap * gap.transpose();
                    count += 1;
                }
                if count == 0 {
                    return Err(Error::InvalidData("degenerate sampler: zero draws".into()));
                }
                let cf = count as f64;
                let mean = &sum_w / cf;
                let var = &sum_ww / cf - &mean * mean.transpose();
                (linalg::symmetrize(&var), linalg::symmetrize(&(&sum_gg / cf)))
            }
        };
        let rank_gap = linalg::psd_rank(&m2, RANK_EIG_TOL);
        Ok(MisalignmentMoments {
            var_principal_bliss: var,
            second_moment_gap: m2,
            rank_gap,
        })
    }
}

/// Iterator over seeded draws.
pub struct DrawIter<'a> {
    model: &'a (dyn ScenarioModel + Send + Sync),
    rng: rand_chacha::ChaCha12Rng,
}

impl Iterator for DrawIter<'_> {
    type Item = ScenarioDraw;

    fn next(&mut self) -> Option<ScenarioDraw> {
        Some(self.model.sample(&mut self.rng))
    }
}

/// One atom of a finite mixture over `(w_bar, u_bar)` pairs.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub probability: f64,
    pub principal: QuadraticObjective,
    pub agent: QuadraticObjective,
    /// Cell weights for signal summaries; uniform when absent.
    pub cell_weights: Option<DVector<f64>>,
}

/// Finite mixture representation of the joint distribution; moments are
/// exact.
pub struct FiniteMixture {
    dim: usize,
    components: Vec<MixtureComponent>,
    cumulative: Vec<f64>,
}

impl FiniteMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidData("mixture needs at least one component".into()));
        };
        let dim = first.principal.dim();
        let mut sum = 0.0;
        let mut cumulative = Vec::with_capacity(components.len());
        for c in &components {
            if !(c.probability >= 0.0) {
                return Err(Error::InvalidProbabilities(format!(
                    "negative component probability {}",
                    c.probability
                )));
            }
            if c.principal.dim() != dim || c.agent.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.principal.dim().max(c.agent.dim()),
                });
            }
            if let Some(mu) = &c.cell_weights {
                DeploymentParams::new(DVector::zeros(0), mu.clone())?;
                if mu.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: mu.len(),
                    });
                }
            }
            sum += c.probability;
            cumulative.push(sum);
        }
        if abs(sum - 1.0) > 1e-8 {
            return Err(Error::InvalidProbabilities(format!(
                "component probabilities sum to {sum}"
            )));
        }
        Ok(Self {
            dim,
            components,
            cumulative,
        })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    fn component_of(&self, draw: &ScenarioDraw) -> &MixtureComponent {
        &self.components[draw.training_state.id as usize]
    }

    fn uniform_cells(&self) -> DVector<f64> {
        DVector::from_element(self.dim, 1.0 / self.dim as f64)
    }
}

impl ScenarioModel for FiniteMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut dyn RngCore) -> ScenarioDraw {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u <= c)
            .unwrap_or(self.components.len() - 1);
        let comp = &self.components[idx];
        let mu = comp
            .cell_weights
            .clone()
            .unwrap_or_else(|| self.uniform_cells());
        ScenarioDraw {
            training_state: TrainingState {
                id: idx as u64,
                params: comp.principal.bliss().clone(),
            },
            deployment: DeploymentParams {
                params: comp.principal.bliss().clone(),
                cell_weights: mu,
            },
            agent_type: comp.agent.bliss() - comp.principal.bliss(),
        }
    }

    fn principal_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective {
        self.component_of(draw).principal.clone()
    }

    fn agent_objective(&self, draw: &ScenarioDraw) -> QuadraticObjective {
        self.component_of(draw).agent.clone()
    }

    fn moments(&self) -> Option<ScenarioMoments> {
        let n = self.dim;
        let mut mean_w = DVector::zeros(n);
        let mut second_w = DMatrix::zeros(n, n);
        let mut m2_gap = DMatrix::zeros(n, n);
        let mut mean_gap = DVector::zeros(n);
        for c in &self.components {
            let w = c.principal.bliss();
            let gap = c.agent.bliss() - w;
            mean_w += c.probability * w;
            second_w += c.probability * w * w.transpose();
            m2_gap += c.probability * &gap * gap.transpose();
            mean_gap += c.probability * gap;
        }
        let var = linalg::symmetrize(&(second_w - &mean_w * mean_w.transpose()));
        Some(ScenarioMoments {
            mean_principal_bliss: mean_w,
            var_principal_bliss: var,
            second_moment_gap: linalg::symmetrize(&m2_gap),
            mean_gap,
        })
    }

    fn fixed_agent_weight(&self) -> Option<DMatrix<f64>> {
        let first = self.components[0].agent.weight();
        for c in &self.components[1..] {
            if linalg::max_abs(&(c.agent.weight() - first)) > 1e-12 * (1.0 + linalg::max_abs(first)) {
                return None;
            }
        }
        Some(first.clone())
    }

    fn fixed_principal_weight(&self) -> Option<DMatrix<f64>> {
        let first = self.components[0].principal.weight();
        for c in &self.components[1..] {
            if linalg::max_abs(&(c.principal.weight() - first))
                > 1e-12 * (1.0 + linalg::max_abs(first))
            {
                return None;
            }
        }
        Some(first.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point_mixture() -> ScenarioDistribution {
        let w1 = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![0.0, 1.0]));
        let w2 = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![2.0, 3.0]));
        let u1 = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![1.0, 1.0]));
        let u2 = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![3.0, 3.0]));
        ScenarioDistribution::new(Box::new(
            FiniteMixture::new(vec![
                MixtureComponent {
                    probability: 0.5,
                    principal: w1,
                    agent: u1,
                    cell_weights: None,
                },
                MixtureComponent {
                    probability: 0.5,
                    principal: w2,
                    agent: u2,
                    cell_weights: None,
                },
            ])
            .unwrap(),
        ))
    }

    #[test]
    fn equal_seeds_equal_draws() {
        let dist = two_point_mixture();
        let a: Vec<_> = dist.draws(9).take(20).collect();
        let b: Vec<_> = dist.draws(9).take(20).collect();
        assert_eq!(a, b);
        let c: Vec<_> = dist.draws(10).take(20).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn aligned_agent_zero_gap() {
        let w = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![1.0, -1.0]));
        let dist = ScenarioDistribution::new(Box::new(
            FiniteMixture::new(vec![MixtureComponent {
                probability: 1.0,
                principal: w.clone(),
                agent: w,
                cell_weights: None,
            }])
            .unwrap(),
        ));
        let m = dist.misalignment_moments(100, 3).unwrap();
        assert_abs_diff_eq!(linalg::max_abs(&m.second_moment_gap), 0.0, epsilon = 1e-14);
        assert_eq!(m.rank_gap, 0);
    }

    #[test]
    fn constant_gap_rank_one() {
        let dist = two_point_mixture(); // gap is (1, 0) in both components
        let m = dist.misalignment_moments(100, 3).unwrap();
        assert_abs_diff_eq!(m.second_moment_gap[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.second_moment_gap[(1, 1)], 0.0, epsilon = 1e-14);
        assert_eq!(m.rank_gap, 1);
    }

    #[test]
    fn empirical_moments_match_analytic_within_four_se() {
        let dist = two_point_mixture();
        let analytic = dist.moments().unwrap();
        // Empirical mean of w_bar over draws; Bernoulli(0.5) mixture between
        // the two blisses, per-coordinate SE = |w2 - w1| / (2 sqrt(n)).
        let n = 1_000_000usize;
        let mut mean = DVector::zeros(2);
        for d in dist.draws(11).take(n) {
            mean += dist.model().principal_objective(&d).bliss();
        }
        mean /= n as f64;
        let se = 2.0 / (2.0 * crate::fmath::sqrt(n as f64));
        for i in 0..2 {
            assert!(
                abs(mean[i] - analytic.mean_principal_bliss[i]) <= 4.0 * se,
                "coordinate {i}: {} vs {}",
                mean[i],
                analytic.mean_principal_bliss[i]
            );
        }
    }

    #[test]
    fn second_moment_dominates_centered_variance() {
        // M2 = Var(gap) + mean mean', so M2 - Var(gap) must be PSD.
        let w = QuadraticObjective::with_identity_weight(DVector::from_vec(vec![0.0, 0.0]));
        let mk = |g: [f64; 2]| QuadraticObjective::with_identity_weight(DVector::from_vec(g.to_vec()));
        let dist = ScenarioDistribution::new(Box::new(
            FiniteMixture::new(vec![
                MixtureComponent {
                    probability: 0.3,
                    principal: w.clone(),
                    agent: mk([1.0, 0.5]),
                    cell_weights: None,
                },
                MixtureComponent {
                    probability: 0.7,
                    principal: w.clone(),
                    agent: mk([0.2, -0.1]),
                    cell_weights: None,
                },
            ])
            .unwrap(),
        ));
        let m = dist.moments().unwrap();
        let var_gap = &m.second_moment_gap - &m.mean_gap * m.mean_gap.transpose();
        let diff = &m.second_moment_gap - var_gap;
        linalg::check_psd(&diff, 1e-8).unwrap();
    }

    #[test]
    fn degenerate_sampler_errors() {
        let dist = two_point_mixture();
        assert!(dist.misalignment_moments(1, 0).is_err() || dist.moments().is_some());
        // Moment-free path: wrap a model without analytic moments.
        struct NoMoments(FiniteMixture);
        impl ScenarioModel for NoMoments {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn sample(&self, rng: &mut dyn RngCore) -> ScenarioDraw {
                self.0.sample(rng)
            }
            fn principal_objective(&self, d: &ScenarioDraw) -> QuadraticObjective {
                self.0.principal_objective(d)
            }
            fn agent_objective(&self, d: &ScenarioDraw) -> QuadraticObjective {
                self.0.agent_objective(d)
            }
        }
        let w = QuadraticObjective::with_identity_weight(DVector::zeros(1));
        let inner = FiniteMixture::new(vec![MixtureComponent {
            probability: 1.0,
            principal: w.clone(),
            agent: w,
            cell_weights: None,
        }])
        .unwrap();
        let dist = ScenarioDistribution::new(Box::new(NoMoments(inner)));
        assert!(matches!(
            dist.misalignment_moments(1, 0),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn bad_cell_weights_rejected() {
        let w = QuadraticObjective::with_identity_weight(DVector::zeros(2));
        let bad = FiniteMixture::new(vec![MixtureComponent {
            probability: 1.0,
            principal: w.clone(),
            agent: w,
            cell_weights: Some(DVector::from_vec(vec![0.7, 0.7])),
        }]);
        assert!(matches!(bad, Err(Error::InvalidProbabilities(_))));
    }
}
