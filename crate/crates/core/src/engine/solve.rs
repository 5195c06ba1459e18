//! Whitening, the stacked orthonormal factorization, best responses, and
//! audit targets.

use alloc::{vec, vec::Vec};
use nalgebra::{DMatrix, DVector};

use super::{
    Explainer, ExplainerTargetRule, PolicyRegime, RegimeOutcome, Restriction,
    RestrictionTargetRule, StackedFactorization,
};
use crate::linalg::{self, PINV_TOL};
use crate::objective::QuadraticObjective;
use crate::{Error, Result};

/// The agent's problem mapped to identity-weight coordinates.
#[derive(Debug, Clone)]
pub struct WhitenedProblem {
    sqrt_u: DMatrix<f64>,
    inv_sqrt_u: DMatrix<f64>,
    /// `b = Omega_U^{1/2} w_bar`, the principal's whitened bliss.
    pub principal_bliss: DVector<f64>,
    /// `B = Omega_U^{-1/2} Omega_W Omega_U^{-1/2}`.
    pub principal_weight: DMatrix<f64>,
}

impl WhitenedProblem {
    /// Sends a bliss point (e.g. `u_bar`) into whitened coordinates.
    pub fn whiten_target(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.sqrt_u * v
    }

    /// Maps a whitened prediction function back to original coordinates.
    pub fn unwhiten(&self, phi: &DVector<f64>) -> DVector<f64> {
        &self.inv_sqrt_u * phi
    }

    pub fn sqrt_weight(&self) -> &DMatrix<f64> {
        &self.sqrt_u
    }

    pub fn inv_sqrt_weight(&self) -> &DMatrix<f64> {
        &self.inv_sqrt_u
    }
}

/// Whitens the game by the agent weight: requires `Omega_U` positive
/// definite (min eigenvalue `> 1e-10 * max`); on near-singularity the error
/// suggests a ridge floor.
pub fn whiten(
    objective_u: &QuadraticObjective,
    objective_w: &QuadraticObjective,
) -> Result<WhitenedProblem> {
    if objective_u.dim() != objective_w.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective_u.dim(),
            got: objective_w.dim(),
        });
    }
    let (sqrt_u, inv_sqrt_u) = linalg::sqrt_and_inv_sqrt_pd(objective_u.weight(), PINV_TOL)?;
    let principal_bliss = &sqrt_u * objective_w.bliss();
    let principal_weight = linalg::symmetrize(&(&inv_sqrt_u * objective_w.weight() * &inv_sqrt_u));
    Ok(WhitenedProblem {
        sqrt_u,
        inv_sqrt_u,
        principal_bliss,
        principal_weight,
    })
}

pub(crate) fn stacked_qr_mats(
    explainer: Option<&DMatrix<f64>>,
    restriction: Option<&DMatrix<f64>>,
) -> Result<StackedFactorization> {
    let k = explainer.map_or(0, |e| e.nrows());
    let m = restriction.map_or(0, |a| a.nrows());
    let r = k + m;
    let n = explainer
        .map(|e| e.ncols())
        .or_else(|| restriction.map(|a| a.ncols()))
        .ok_or_else(|| Error::InvalidParameter("stacked factorization of nothing".into()))?;
    if let (Some(e), Some(a)) = (explainer, restriction) {
        if e.ncols() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: e.ncols(),
                got: a.ncols(),
            });
        }
    }
    if r > n {
        return Err(Error::RedundantConditions);
    }
    // Stack (E; A), reverse the row order, and QR-factor the transpose; with
    // the reversal undone this yields (E; A) Q = (0 | R) with R upper
    // triangular in the original row order.
    let mut stack = DMatrix::zeros(r, n);
    if let Some(e) = explainer {
        stack.view_mut((0, 0), (k, n)).copy_from(e);
    }
    if let Some(a) = restriction {
        stack.view_mut((k, 0), (m, n)).copy_from(a);
    }
    let mut reversed_t = DMatrix::zeros(n, r);
    for i in 0..r {
        for j in 0..n {
            reversed_t[(j, i)] = stack[(r - 1 - i, j)];
        }
    }
    let (qf, rf) = linalg::full_qr(&reversed_t);
    let scale = stack.norm().max(f64::MIN_POSITIVE);
    for i in 0..r {
        if crate::fmath::abs(rf[(i, i)]) <= PINV_TOL * scale {
            return Err(Error::RedundantConditions);
        }
    }
    let mut q = DMatrix::zeros(n, n);
    for j in 0..(n - r) {
        q.set_column(j, &qf.column(n - 1 - j));
    }
    for j in 0..r {
        q.set_column(n - r + j, &qf.column(r - 1 - j));
    }
    let mut rr = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            rr[(i, j)] = rf[(r - 1 - j, r - 1 - i)];
        }
    }
    Ok(StackedFactorization {
        q,
        r: rr,
        free: n - r,
        explained: k,
        restricted: m,
    })
}

/// Factors stacked explainer/restriction rows as `(E; A) Q = (0 | R)`;
/// errors when the stacked rows are redundant or contradictory.
pub fn stacked_qr(
    explainer: Option<&Explainer>,
    restriction: Option<&Restriction>,
) -> Result<StackedFactorization> {
    stacked_qr_mats(
        explainer.map(Explainer::matrix),
        restriction.map(Restriction::matrix),
    )
}

enum BlockTarget<'a> {
    /// Target in original constraint units (`e` or `a`).
    Raw(&'a DVector<f64>),
    /// Target directly in whitened block coordinates.
    Whitened(DVector<f64>),
}

/// Precomputed solver for one `(Omega_U, E, A)` combination; per-draw work is
/// a handful of matrix-vector products.
pub struct RegimeSolver {
    sqrt_u: DMatrix<f64>,
    inv_sqrt_u: DMatrix<f64>,
    fact: Option<StackedFactorization>,
    n: usize,
}

impl RegimeSolver {
    pub fn new(
        agent_weight: &DMatrix<f64>,
        explainer: Option<&Explainer>,
        restriction: Option<&Restriction>,
    ) -> Result<Self> {
        let n = agent_weight.nrows();
        let (sqrt_u, inv_sqrt_u) = linalg::sqrt_and_inv_sqrt_pd(agent_weight, PINV_TOL)?;
        let fact = match (explainer, restriction) {
            (None, None) => None,
            (e, a) => {
                let we = e.map(|e| e.matrix() * &inv_sqrt_u);
                let wa = a.map(|a| a.matrix() * &inv_sqrt_u);
                Some(stacked_qr_mats(we.as_ref(), wa.as_ref())?)
            }
        };
        Ok(Self {
            sqrt_u,
            inv_sqrt_u,
            fact,
            n,
        })
    }

    pub fn factorization(&self) -> Option<&StackedFactorization> {
        self.fact.as_ref()
    }

    /// `Q' Omega_U^{1/2} v`: whitened coordinates of a bliss point, split
    /// into (free, explained, restricted) blocks by the factorization.
    pub fn whitened_blocks(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.fact {
            Some(f) => f.q.transpose() * (&self.sqrt_u * v),
            None => &self.sqrt_u * v,
        }
    }

    /// Explained-block slice of [`Self::whitened_blocks`].
    pub fn explained_block(&self, blocks: &DVector<f64>) -> DVector<f64> {
        let f = self.fact.as_ref().expect("constrained solver");
        blocks.rows(f.free, f.explained).into()
    }

    /// Restricted-block slice of [`Self::whitened_blocks`].
    pub fn restricted_block(&self, blocks: &DVector<f64>) -> DVector<f64> {
        let f = self.fact.as_ref().expect("constrained solver");
        blocks.rows(f.free + f.explained, f.restricted).into()
    }

    fn resolve_blocks(
        &self,
        explained: Option<BlockTarget<'_>>,
        restricted: Option<BlockTarget<'_>>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let fact = self.fact.as_ref().expect("constrained solver");
        let (k, m) = (fact.explained, fact.restricted);
        let f2 = match restricted {
            None => DVector::zeros(0),
            Some(BlockTarget::Whitened(v)) => {
                if v.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, got: v.len() });
                }
                v
            }
            Some(BlockTarget::Raw(a)) => {
                if a.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, got: a.len() });
                }
                linalg::solve_upper_triangular(&fact.r2(), a)?
            }
        };
        let f1 = match explained {
            None => DVector::zeros(0),
            Some(BlockTarget::Whitened(v)) => {
                if v.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: v.len() });
                }
                v
            }
            Some(BlockTarget::Raw(e)) => {
                if e.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: e.len() });
                }
                let rhs = if m > 0 { e - fact.r12() * &f2 } else { e.clone() };
                linalg::solve_upper_triangular(&fact.r1(), &rhs)?
            }
        };
        Ok((f1, f2))
    }

    fn solve(
        &self,
        u_bar: &DVector<f64>,
        explained: Option<BlockTarget<'_>>,
        restricted: Option<BlockTarget<'_>>,
    ) -> Result<DVector<f64>> {
        if u_bar.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u_bar.len(),
            });
        }
        let Some(fact) = self.fact.as_ref() else {
            return Ok(u_bar.clone());
        };
        let (f1, f2) = self.resolve_blocks(explained, restricted)?;
        let c_tilde = fact.q.transpose() * (&self.sqrt_u * u_bar);
        let mut f_tilde = DVector::zeros(self.n);
        f_tilde.rows_mut(0, fact.free).copy_from(&c_tilde.rows(0, fact.free));
        f_tilde.rows_mut(fact.free, fact.explained).copy_from(&f1);
        f_tilde
            .rows_mut(fact.free + fact.explained, fact.restricted)
            .copy_from(&f2);
        Ok(&self.inv_sqrt_u * (&fact.q * f_tilde))
    }

    /// Best response with constraint targets in original units.
    pub fn best_response(
        &self,
        u_bar: &DVector<f64>,
        explainer_target: Option<&DVector<f64>>,
        restriction_target: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        self.solve(
            u_bar,
            explainer_target.map(BlockTarget::Raw),
            restriction_target.map(BlockTarget::Raw),
        )
    }

    /// Best response with targets given directly as whitened block values
    /// (used by the Monte Carlo loop; equivalent to [`Self::best_response`]).
    pub fn best_response_whitened(
        &self,
        u_bar: &DVector<f64>,
        explained_target: Option<DVector<f64>>,
        restricted_target: Option<DVector<f64>>,
    ) -> Result<DVector<f64>> {
        self.solve(
            u_bar,
            explained_target.map(BlockTarget::Whitened),
            restricted_target.map(BlockTarget::Whitened),
        )
    }
}

/// The agent's constrained optimum
/// `argmin (f - u_bar)' Omega_U (f - u_bar)  s.t.  E f = e, A f = a`.
pub fn agent_best_response(
    agent: &QuadraticObjective,
    explainer: Option<(&Explainer, &DVector<f64>)>,
    restriction: Option<(&Restriction, &DVector<f64>)>,
) -> Result<DVector<f64>> {
    let solver = RegimeSolver::new(
        agent.weight(),
        explainer.map(|(e, _)| e),
        restriction.map(|(a, _)| a),
    )?;
    solver.best_response(
        agent.bliss(),
        explainer.map(|(_, e)| e),
        restriction.map(|(_, a)| a),
    )
}

/// Principal welfare `-(f - w_bar)' Omega_W (f - w_bar)`; non-positive (tiny
/// positive roundoff clamps to zero).
pub fn welfare(f: &DVector<f64>, principal: &QuadraticObjective) -> f64 {
    (-principal.loss(f)).min(0.0)
}

/// Optimal audit targets: the explainer target is the principal's preferred
/// explanation at the realized state, the restriction target is fixed at
/// rule-setting from the distribution mean of the principal bliss. Returns
/// `(e, a)` in original constraint units.
pub fn audit_target(
    explainer: Option<&Explainer>,
    restriction: Option<&Restriction>,
    agent_weight: &DMatrix<f64>,
    principal_bliss_draw: &DVector<f64>,
    principal_bliss_mean: &DVector<f64>,
) -> Result<(Option<DVector<f64>>, Option<DVector<f64>>)> {
    if explainer.is_none() && restriction.is_none() {
        return Ok((None, None));
    }
    let solver = RegimeSolver::new(agent_weight, explainer, restriction)?;
    let fact = solver.fact.as_ref().expect("constrained solver");
    let (k, m) = (fact.explained, fact.restricted);
    let draw_blocks = solver.whitened_blocks(principal_bliss_draw);
    let mean_blocks = solver.whitened_blocks(principal_bliss_mean);
    let f1 = draw_blocks.rows(fact.free, k).into_owned();
    let f2 = mean_blocks.rows(fact.free + k, m).into_owned();
    let mut f_range = DVector::zeros(k + m);
    f_range.rows_mut(0, k).copy_from(&f1);
    f_range.rows_mut(k, m).copy_from(&f2);
    let targets = &fact.r * f_range;
    let e = (k > 0).then(|| targets.rows(0, k).into_owned());
    let a = (m > 0).then(|| targets.rows(k, m).into_owned());
    Ok((e, a))
}

pub(crate) struct PreparedRegime<'a> {
    pub(crate) solver: RegimeSolver,
    pub(crate) explainer_rule: Option<&'a ExplainerTargetRule>,
    /// Whitened restricted-block target, resolved at rule-setting time.
    pub(crate) restricted_target: Option<DVector<f64>>,
}

impl<'a> PreparedRegime<'a> {
    /// Resolves the rule-setting stage: builds the solver and fixes the
    /// ex-ante restriction target.
    pub(crate) fn new(
        regime: &'a PolicyRegime,
        agent_weight: &DMatrix<f64>,
        principal_bliss_mean: Option<&DVector<f64>>,
    ) -> Result<Self> {
        let solver = RegimeSolver::new(
            agent_weight,
            regime.explainer.as_ref().map(|(e, _)| e),
            regime.restriction.as_ref().map(|(a, _)| a),
        )?;
        let restricted_target = match regime.restriction.as_ref() {
            None => None,
            Some((_, RestrictionTargetRule::Fixed(a))) => {
                let fact = solver.fact.as_ref().expect("constrained");
                Some(linalg::solve_upper_triangular(&fact.r2(), a)?)
            }
            Some((_, RestrictionTargetRule::PrincipalMean)) => {
                let mean = principal_bliss_mean.ok_or_else(|| {
                    Error::MissingMoments(
                        "ex-ante restriction target needs the mean principal bliss".into(),
                    )
                })?;
                let blocks = solver.whitened_blocks(mean);
                Some(solver.restricted_block(&blocks))
            }
        };
        Ok(Self {
            solver,
            explainer_rule: regime.explainer.as_ref().map(|(_, rule)| rule),
            restricted_target,
        })
    }

    /// Equilibrium prediction function for one draw.
    pub(crate) fn best_response(
        &self,
        principal_bliss: &DVector<f64>,
        u_bar: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        if self.solver.fact.is_none() {
            return Ok(u_bar.clone());
        }
        let explained = match self.explainer_rule {
            None => None,
            Some(ExplainerTargetRule::PrincipalDraw) => {
                let blocks = self.solver.whitened_blocks(principal_bliss);
                Some(BlockTarget::Whitened(self.solver.explained_block(&blocks)))
            }
            Some(ExplainerTargetRule::Fixed(e)) => Some(BlockTarget::Raw(e)),
        };
        let restricted = self
            .restricted_target
            .as_ref()
            .map(|t| BlockTarget::Whitened(t.clone()));
        self.solver.solve(u_bar, explained, restricted)
    }
}

/// Plays one draw of the game under a regime and records the outcome. The
/// mean principal bliss is only needed when the regime carries a
/// `PrincipalMean` restriction target.
pub fn evaluate_draw(
    regime: &PolicyRegime,
    principal: &QuadraticObjective,
    agent: &QuadraticObjective,
    principal_bliss_mean: Option<&DVector<f64>>,
) -> Result<RegimeOutcome> {
    let prepared = PreparedRegime::new(regime, agent.weight(), principal_bliss_mean)?;
    let f = prepared.best_response(principal.bliss(), agent.bliss())?;
    let realized_welfare = welfare(&f, principal);
    Ok(RegimeOutcome {
        chosen_f: f,
        realized_welfare,
        // With unbounded audit costs the best response always satisfies the
        // dictated targets, so the audit passes in equilibrium.
        audit_passed: true,
    })
}

/// Dense KKT-system solve of the same equality-constrained program; used as
/// an independent oracle in tests.
pub fn kkt_best_response(
    agent: &QuadraticObjective,
    explainer: Option<(&Explainer, &DVector<f64>)>,
    restriction: Option<(&Restriction, &DVector<f64>)>,
) -> Result<DVector<f64>> {
    let n = agent.dim();
    let mut rows: Vec<(Vec<f64>, f64)> = vec![];
    if let Some((e, target)) = explainer {
        for i in 0..e.rows() {
            rows.push((e.matrix().row(i).iter().copied().collect(), target[i]));
        }
    }
    if let Some((a, target)) = restriction {
        for i in 0..a.rows() {
            rows.push((a.matrix().row(i).iter().copied().collect(), target[i]));
        }
    }
    let c = rows.len();
    if c == 0 {
        return Ok(agent.bliss().clone());
    }
    let dim = n + c;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(agent.weight());
    for (i, (row, _)) in rows.iter().enumerate() {
        for j in 0..n {
            kkt[(n + i, j)] = row[j];
            kkt[(j, n + i)] = row[j];
        }
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n)
        .copy_from(&(agent.weight() * agent.bliss()));
    for (i, (_, t)) in rows.iter().enumerate() {
        rhs[n + i] = *t;
    }
    let lu = kkt.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidMatrix("singular KKT system".into()))?;
    Ok(sol.rows(0, n).into_owned())
}
