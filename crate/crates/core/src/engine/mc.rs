//! Monte Carlo welfare evaluation, the outcome-audit demonstration, and the
//! exhaustive second-best regime search.

use alloc::{vec, vec::Vec};
use nalgebra::{DMatrix, DVector};

use super::solve::PreparedRegime;
use super::{explain, Explainer, PolicyRegime, Restriction, ThresholdRule};
use crate::rng::child_seed;
use crate::scenario::ScenarioDistribution;
use crate::signal::realize_signal;
use crate::{Error, Result};

/// Expected principal welfare under a regime: Monte Carlo mean and standard
/// error over `n_samples` seeded draws, with the agent best-responding per
/// draw. Deterministic given the seed; regimes evaluated with equal seeds
/// share draws (common random numbers).
pub fn expected_welfare(
    regime: &PolicyRegime,
    dist: &ScenarioDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter(
            "expected_welfare needs n_samples >= 100".into(),
        ));
    }
    let model = dist.model();
    let mean_bliss = dist.moments().map(|m| m.mean_principal_bliss);
    let fixed_weight = model.fixed_agent_weight();
    let constrained = !regime.is_unconstrained();
    // Rule-setting stage: when the agent weight is fixed the whitening and
    // factorization are shared across draws.
    let prepared: Option<PreparedRegime<'_>> = match (&fixed_weight, constrained) {
        (Some(w), true) => Some(PreparedRegime::new(regime, w, mean_bliss.as_ref())?),
        _ => None,
    };

    let mut count = 0.0f64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for draw in dist.draws(seed).take(n_samples) {
        let principal = model.principal_objective(&draw);
        let value = if !constrained {
            let agent = model.agent_objective(&draw);
            super::solve::welfare(agent.bliss(), &principal)
        } else {
            let agent = model.agent_objective(&draw);
            let f = match &prepared {
                Some(p) => p.best_response(principal.bliss(), agent.bliss())?,
                None => {
                    let p = PreparedRegime::new(regime, agent.weight(), mean_bliss.as_ref())?;
                    p.best_response(principal.bliss(), agent.bliss())?
                }
            };
            super::solve::welfare(&f, &principal)
        };
        count += 1.0;
        let delta = value - mean;
        mean += delta / count;
        m2 += delta * (value - mean);
    }
    let variance = if count > 1.0 { m2 / (count - 1.0) } else { 0.0 };
    let std_error = crate::fmath::sqrt(variance / count);
    Ok((mean, std_error))
}

/// One row of the outcome-audit demonstration table.
#[derive(Debug, Clone)]
pub struct AuditDemoRow {
    pub candidate: DVector<f64>,
    pub failure_probability: f64,
}

/// Simulates a threshold audit on the realized public signal for each
/// candidate prediction function: the fraction of draws whose signal exceeds
/// the threshold. Under full-support noise every candidate fails with
/// positive probability, which is why an unbounded-penalty principal never
/// conditions her audit on the signal.
pub fn outcome_audit_demo(
    rule: &ThresholdRule,
    dist: &ScenarioDistribution,
    candidates: &[DVector<f64>],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<AuditDemoRow>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for (ci, f) in candidates.iter().enumerate() {
        let cand_seed = child_seed(seed, ci as u64);
        let mut failures = 0usize;
        for (di, draw) in dist.draws(cand_seed).take(n_samples).enumerate() {
            let signal = realize_signal(f, &draw, &rule.spec, child_seed(cand_seed, di as u64))?;
            if signal.value > rule.threshold {
                failures += 1;
            }
        }
        rows.push(AuditDemoRow {
            candidate: f.clone(),
            failure_probability: failures as f64 / n_samples as f64,
        });
    }
    Ok(rows)
}

/// Evaluation of one candidate regime in the second-best search.
#[derive(Debug, Clone)]
pub struct RegimeEvaluation {
    /// Number of restricted dimensions (0 = explainer audit only).
    pub restricted_dims: usize,
    pub mean_welfare: f64,
    pub std_error: f64,
}

/// Exhaustive second-best search over the restriction dimension
/// `m in 0..=n-k`: the explainer takes the top-k eigenvector rows of the
/// weighted misalignment moment, the candidate restriction the next `m`
/// rows, with optimal (mean/draw) targets. All candidates share the seed so
/// comparisons use common random numbers.
pub fn search_restriction_dims(
    dist: &ScenarioDistribution,
    weight: &DMatrix<f64>,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<RegimeEvaluation>> {
    let n = dist.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(
            "regime search needs an explainer dimension in 1..=n".into(),
        ));
    }
    let moments = dist.misalignment_moments(n_samples, child_seed(seed, u64::MAX)).map_err(|_| {
        Error::MissingMoments("regime search needs misalignment moments".into())
    })?;
    let explainer_rows = explain::weighted_gap_rows(&moments.second_moment_gap, weight, 0, k)?;
    let explainer = Explainer::new(explainer_rows)?;
    let mut out = vec![];
    for m in 0..=(n - k) {
        let regime = if m == 0 {
            PolicyRegime::explainer_audit(explainer.clone())
        } else {
            let rows = explain::weighted_gap_rows(&moments.second_moment_gap, weight, k, m)?;
            PolicyRegime::combined(explainer.clone(), Restriction::new(rows)?)
        };
        let (mean_welfare, std_error) = expected_welfare(&regime, dist, n_samples, seed)?;
        out.push(RegimeEvaluation {
            restricted_dims: m,
            mean_welfare,
            std_error,
        });
    }
    Ok(out)
}
