//! Public deployment signals and their noise models.
//!
//! After deployment the overseer observes a noisy scalar summary of realized
//! outcomes, e.g. the default rate in a designated high-risk segment. The
//! summary is the cell-weighted mean of `(realized parameters - f)` over a
//! configured cell subset; the noise model is declared independently of `f`,
//! so the signal's support never depends on the agent's choice.

use alloc::{format, vec::Vec};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::rng_from;
use crate::scenario::ScenarioDraw;
use crate::{Error, Result};
use nalgebra::DVector;

/// Full-support noise descriptors for public signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Additive Gaussian noise; full support whenever `scale > 0`.
    Gaussian { scale: f64 },
}

impl NoiseModel {
    pub fn has_full_support(&self) -> bool {
        match self {
            NoiseModel::Gaussian { scale } => *scale > 0.0,
        }
    }
}

/// Which cells enter the deterministic summary, and the noise around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    /// Indices of the cells whose weighted mean shortfall is reported.
    pub cells: Vec<usize>,
    pub noise: NoiseModel,
}

/// A realized public signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicSignal {
    pub value: f64,
    pub noise_model: NoiseModel,
}

/// Deterministic summary of `(f, draw)`: the cell-weight-normalized mean of
/// `deployment params - f` over the spec's cell subset.
pub fn deterministic_summary(
    f: &DVector<f64>,
    draw: &ScenarioDraw,
    spec: &SignalSpec,
) -> Result<f64> {
    let n = draw.deployment.params.len();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if spec.cells.is_empty() {
        return Err(Error::InvalidParameter("signal cell subset is empty".into()));
    }
    let mut num = 0.0;
    let mut mass = 0.0;
    for &c in &spec.cells {
        if c >= n {
            return Err(Error::InvalidParameter(format!(
                "signal cell index {c} out of range for dimension {n}"
            )));
        }
        let mu = draw.deployment.cell_weights[c];
        num += mu * (draw.deployment.params[c] - f[c]);
        mass += mu;
    }
    if mass <= 0.0 {
        return Err(Error::InvalidParameter(
            "signal cell subset has zero probability mass".into(),
        ));
    }
    Ok(num / mass)
}

/// Realizes the public signal for prediction function `f` under `draw`;
/// identical seeds give identical signals.
pub fn realize_signal(
    f: &DVector<f64>,
    draw: &ScenarioDraw,
    spec: &SignalSpec,
    seed: u64,
) -> Result<PublicSignal> {
    let summary = deterministic_summary(f, draw, spec)?;
    let noise = match spec.noise {
        NoiseModel::Gaussian { scale } => {
            if scale == 0.0 {
                0.0
            } else {
                let z: f64 = rng_from(seed).sample(StandardNormal);
                scale * z
            }
        }
    };
    Ok(PublicSignal {
        value: summary + noise,
        noise_model: spec.noise,
    })
}
