//! Oversight of prediction algorithms as a principal-agent game.
//!
//! A principal delegates a prediction task to an agent with possibly
//! misaligned preferences, then regulates through two instruments: ex-ante
//! linear restrictions `A f = a` on the admissible prediction functions, and
//! ex-post audits of a low-dimensional linear explanation `E f` of the chosen
//! function. Preferences on both sides are quadratic losses around bliss
//! points, so equilibria and welfare have closed linear-algebraic solutions.
//!
//! The crate has two halves:
//!
//! * a theory engine ([`objective`], [`scenario`], [`signal`], [`engine`],
//!   [`closed_form`]) that solves the game exactly — agent best responses via
//!   whitening plus a stacked orthonormal factorization, optimal audit
//!   targets, explainer synthesis from misalignment moments, and Monte Carlo
//!   or analytic welfare comparison across policy regimes, with a
//!   two-binary-variable world whose welfare is known in closed form; and
//! * an empirical counterpart ([`datagen`], [`train`]) that trains credit
//!   default predictors (logistic and two-hidden-layer networks) under
//!   misalignment penalties and explanation constraints on synthetic data,
//!   and reports AUC / log-loss / log-odds-disparity metrics.
//!
//! Everything is deterministic given explicit seeds; no IO lives here (see
//! the companion CLI crate for file formats and orchestration).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod closed_form;
pub mod datagen;
pub mod engine;
mod error;
mod fmath;
pub mod linalg;
pub mod objective;
pub mod rng;
pub mod scenario;
pub mod signal;
pub mod train;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
