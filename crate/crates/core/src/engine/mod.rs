//! The regulation game: restrictions, explainers, best responses, welfare.
//!
//! The agent minimizes `(f - u_bar)' Omega_U (f - u_bar)` subject to an
//! ex-ante restriction `A f = a` and an audited explanation `E f = e`. After
//! whitening by `Omega_U^{1/2}` the stacked conditions factor as
//! `(E; A) Q = (0 | R)` with `Q` orthonormal and `R` upper triangular, which
//! splits the whitened coordinates into a free block (agent's choice), an
//! explained block (dictated ex post, state-dependent), and a restricted
//! block (dictated ex ante, state-independent).

mod explain;
mod mc;
mod solve;

pub use explain::{
    exante_recommended, first_best_achievable, prediction_explainer, targeted_explainer,
    TargetedExplainer,
};
pub use mc::{
    expected_welfare, outcome_audit_demo, search_restriction_dims, AuditDemoRow, RegimeEvaluation,
};
pub use solve::{
    agent_best_response, audit_target, evaluate_draw, kkt_best_response, stacked_qr, welfare,
    whiten, RegimeSolver, WhitenedProblem,
};

use alloc::format;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, PINV_TOL};
use crate::signal::SignalSpec;
use crate::{Error, Result};

fn check_full_row_rank(matrix: &DMatrix<f64>, what: &str) -> Result<()> {
    let (rows, cols) = matrix.shape();
    if rows == 0 || rows > cols {
        return Err(Error::InvalidMatrix(format!(
            "{what} must have 1..=n rows, got {rows}x{cols}"
        )));
    }
    // Singular values from the eigenvalues of M M'; full row rank requires
    // sigma_min > 1e-10 * sigma_max.
    let gram = matrix * matrix.transpose();
    let (vals, _) = linalg::sym_eigen_desc(&gram);
    let smax = crate::fmath::sqrt(vals[0].max(0.0));
    let smin = crate::fmath::sqrt(vals[rows - 1].max(0.0));
    if smin <= PINV_TOL * smax || smax == 0.0 {
        return Err(Error::InvalidMatrix(format!(
            "{what} is rank deficient: sigma_min {smin:e}, sigma_max {smax:e}"
        )));
    }
    Ok(())
}

/// An ex-ante linear restriction `A f = a` (the target `a` lives in the
/// policy regime).
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    matrix: DMatrix<f64>,
}

impl Restriction {
    /// Requires full row rank (threshold `1e-10 * sigma_max`) and `m <= n`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_full_row_rank(&matrix, "restriction")?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// An explanation mapping `f -> E f` with `k <= n` independent rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Explainer {
    matrix: DMatrix<f64>,
}

impl Explainer {
    /// Requires full row rank (threshold `1e-10 * sigma_max`) and `k <= n`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_full_row_rank(&matrix, "explainer")?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn explain(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.matrix * f
    }
}

/// Orthonormal factorization of stacked explainer/restriction rows:
/// `(E; A) Q = (0 | R)`.
#[derive(Debug, Clone)]
pub struct StackedFactorization {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    free: usize,
    explained: usize,
    restricted: usize,
}

impl StackedFactorization {
    /// Orthonormal `n x n` basis; columns ordered free, explained, restricted.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Upper triangular `(k + m) x (k + m)` factor.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `(free, explained, restricted)` block sizes.
    pub fn block_dims(&self) -> (usize, usize, usize) {
        (self.free, self.explained, self.restricted)
    }

    /// `R_1`: the `k x k` block multiplying the explained coordinates.
    pub fn r1(&self) -> DMatrix<f64> {
        self.r.view((0, 0), (self.explained, self.explained)).into()
    }

    /// `R_12`: the `k x m` coupling block.
    pub fn r12(&self) -> DMatrix<f64> {
        self.r
            .view((0, self.explained), (self.explained, self.restricted))
            .into()
    }

    /// `R_2`: the `m x m` block multiplying the restricted coordinates.
    pub fn r2(&self) -> DMatrix<f64> {
        self.r
            .view(
                (self.explained, self.explained),
                (self.restricted, self.restricted),
            )
            .into()
    }
}

/// How the ex-ante restriction target `a` is set at rule-setting time.
#[derive(Debug, Clone, PartialEq)]
pub enum RestrictionTargetRule {
    /// Explicit target vector.
    Fixed(DVector<f64>),
    /// The expectation of the principal's whitened bliss on the restricted
    /// block (the optimal ex-ante rule); requires distribution moments.
    PrincipalMean,
}

/// How the audited explanation target `e` is set.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplainerTargetRule {
    /// Explicit target vector.
    Fixed(DVector<f64>),
    /// The principal's preferred explanation at the realized state,
    /// `e = E w_bar(s)` (state-dependent, the optimal ex-post rule).
    PrincipalDraw,
}

/// A threshold audit on the realized public signal (Remark-2 demo regime).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRule {
    pub spec: SignalSpec,
    pub threshold: f64,
}

/// A policy regime: any combination of an ex-ante restriction, an audited
/// explainer, and an outcome-threshold rule.
#[derive(Debug, Clone)]
pub struct PolicyRegime {
    pub restriction: Option<(Restriction, RestrictionTargetRule)>,
    pub explainer: Option<(Explainer, ExplainerTargetRule)>,
    /// Outcome-based audit. With unbounded audit costs no participating
    /// agent tolerates any failure probability, so in equilibrium the rule
    /// constrains nothing; it exists for the audit demo.
    pub outcome_rule: Option<ThresholdRule>,
}

impl PolicyRegime {
    pub fn no_regulation() -> Self {
        Self {
            restriction: None,
            explainer: None,
            outcome_rule: None,
        }
    }

    pub fn ex_ante(restriction: Restriction) -> Self {
        Self {
            restriction: Some((restriction, RestrictionTargetRule::PrincipalMean)),
            explainer: None,
            outcome_rule: None,
        }
    }

    pub fn ex_ante_fixed(restriction: Restriction, target: DVector<f64>) -> Self {
        Self {
            restriction: Some((restriction, RestrictionTargetRule::Fixed(target))),
            explainer: None,
            outcome_rule: None,
        }
    }

    pub fn explainer_audit(explainer: Explainer) -> Self {
        Self {
            restriction: None,
            explainer: Some((explainer, ExplainerTargetRule::PrincipalDraw)),
            outcome_rule: None,
        }
    }

    pub fn combined(explainer: Explainer, restriction: Restriction) -> Self {
        Self {
            restriction: Some((restriction, RestrictionTargetRule::PrincipalMean)),
            explainer: Some((explainer, ExplainerTargetRule::PrincipalDraw)),
            outcome_rule: None,
        }
    }

    pub fn outcome_audit(rule: ThresholdRule) -> Self {
        Self {
            restriction: None,
            explainer: None,
            outcome_rule: Some(rule),
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.restriction.is_none() && self.explainer.is_none()
    }
}

/// Outcome of one play of the game under a regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeOutcome {
    pub chosen_f: DVector<f64>,
    /// `-(f - w_bar)' Omega_W (f - w_bar)`, always `<= 0`.
    pub realized_welfare: f64,
    pub audit_passed: bool,
}
