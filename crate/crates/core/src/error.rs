use alloc::string::String;
use core::fmt;

/// Errors from game-engine, closed-form, data-generation, and training code.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands have incompatible dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// A probability vector fails its simplex invariants.
    InvalidProbabilities(String),
    /// A matrix fails a structural requirement (symmetry, PSD, full rank).
    InvalidMatrix(String),
    /// Stacked explainer/restriction rows are redundant or contradictory.
    RedundantConditions,
    /// A weight matrix is numerically singular where positive definiteness
    /// is required; callers can retry after applying a ridge floor.
    SingularWeight(String),
    /// Moments were requested from a distribution that cannot provide them.
    MissingMoments(String),
    /// A scalar or configuration value is out of its documented range.
    InvalidParameter(String),
    /// Data fails a precondition (empty, single-class, single-group, ...).
    InvalidData(String),
    /// Training diverged (non-finite objective).
    Diverged(String),
    /// An iterative search failed to converge within its budget.
    NoConvergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidProbabilities(msg) => write!(f, "invalid probabilities: {msg}"),
            Error::InvalidMatrix(msg) => write!(f, "invalid matrix: {msg}"),
            Error::RedundantConditions => {
                write!(f, "explainer/restriction conditions are redundant or contradictory")
            }
            Error::SingularWeight(msg) => write!(
                f,
                "weight matrix is numerically singular: {msg}; apply a ridge floor \
                 (e.g. `QuadraticObjective::with_ridge_floor`) if near-singularity is expected"
            ),
            Error::MissingMoments(msg) => write!(f, "analytic moments unavailable: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::Diverged(msg) => write!(f, "training diverged: {msg}"),
            Error::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for Error {}
