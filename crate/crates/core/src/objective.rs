//! Quadratic objectives and their conditional expectations.
//!
//! Both sides of the game value a prediction function `f` through
//! `-(f - v)' W (f - v)` for a bliss point `v` and a symmetric PSD weight
//! `W`. Conditioning on the training state preserves this form with
//! `W_bar = E[W]` and `v_bar = E[W]^+ E[W v]`, which is what
//! [`expected_objective`] computes.

use alloc::{format, string::String, vec::Vec};
use nalgebra::{DMatrix, DVector};

use crate::fmath::abs;
use crate::linalg::{self, PINV_TOL, PSD_TOL, SYM_TOL};
use crate::{Error, Result};

/// A quadratic loss `-(f - bliss)' weight (f - bliss)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    bliss: DVector<f64>,
    weight: DMatrix<f64>,
}

impl QuadraticObjective {
    /// Validates symmetry (`max |W - W'| <= 1e-10`) and positive
    /// semidefiniteness (min eigenvalue `>= -1e-8 * max |eigenvalue|`).
    pub fn new(bliss: DVector<f64>, weight: DMatrix<f64>) -> Result<Self> {
        if weight.nrows() != bliss.len() {
            return Err(Error::DimensionMismatch {
                expected: bliss.len(),
                got: weight.nrows(),
            });
        }
        linalg::check_symmetric(&weight, SYM_TOL)?;
        linalg::check_psd(&weight, PSD_TOL)?;
        Ok(Self { bliss, weight })
    }

    /// Skips the symmetry/PSD checks; for hot paths where the weight was
    /// validated once at model construction and is reused per draw.
    pub fn new_unchecked(bliss: DVector<f64>, weight: DMatrix<f64>) -> Self {
        debug_assert_eq!(bliss.len(), weight.nrows());
        Self { bliss, weight }
    }

    /// Identity-weighted objective.
    pub fn with_identity_weight(bliss: DVector<f64>) -> Self {
        let n = bliss.len();
        Self {
            bliss,
            weight: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.bliss.len()
    }

    pub fn bliss(&self) -> &DVector<f64> {
        &self.bliss
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    /// The (non-negative) quadratic loss at `f`.
    pub fn loss(&self, f: &DVector<f64>) -> f64 {
        linalg::centered_quad_form(f, &self.bliss, &self.weight)
    }

    /// Replaces the weight by `W + eps I`. `eps = None` uses the default
    /// floor `1e-8 * trace(W) / n`.
    pub fn with_ridge_floor(&self, eps: Option<f64>) -> Self {
        let n = self.dim();
        let eps = eps.unwrap_or_else(|| 1e-8 * self.weight.trace() / n as f64);
        let mut weight = self.weight.clone();
        for i in 0..n {
            weight[(i, i)] += eps;
        }
        Self {
            bliss: self.bliss.clone(),
            weight,
        }
    }
}

fn describe_probability_failure(probs: &[f64]) -> Option<String> {
    let mut sum = 0.0;
    for &p in probs {
        if !(p >= 0.0) {
            return Some(format!("negative probability {p}"));
        }
        sum += p;
    }
    if abs(sum - 1.0) > 1e-8 {
        return Some(format!("probabilities sum to {sum}, not 1"));
    }
    None
}

/// Collapses state-conditional quadratic objectives into one:
/// `W_bar = sum p_i W_i` and `v_bar = W_bar^+ sum p_i W_i v_i`, with the
/// pseudoinverse dropping singular values below `1e-10 * max`.
pub fn expected_objective(
    conditional_draws: &[(f64, QuadraticObjective)],
) -> Result<QuadraticObjective> {
    let Some((_, first)) = conditional_draws.first() else {
        return Err(Error::InvalidData("no conditional draws".into()));
    };
    let n = first.dim();
    let probs: Vec<f64> = conditional_draws.iter().map(|(p, _)| *p).collect();
    if let Some(msg) = describe_probability_failure(&probs) {
        return Err(Error::InvalidProbabilities(msg));
    }
    let mut weight = DMatrix::zeros(n, n);
    let mut weighted_bliss = DVector::zeros(n);
    for (p, obj) in conditional_draws {
        if obj.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: obj.dim(),
            });
        }
        weight += *p * obj.weight();
        weighted_bliss += *p * (obj.weight() * obj.bliss());
    }
    let bliss = linalg::pinv_psd(&weight, PINV_TOL) * weighted_bliss;
    QuadraticObjective::new(bliss, linalg::symmetrize(&weight))
}
