//! Experiment manifests: enough to replay any run byte-identically.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    /// The full resolved experiment configuration.
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn config_sha256(config: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_vec(config)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn write_manifest(
    out_dir: &Path,
    config: &ExperimentConfig,
    outputs: &[String],
    wall_time_seconds: f64,
) -> Result<()> {
    let manifest = Manifest {
        kind: config.kind().into(),
        config: config.clone(),
        config_sha256: config_sha256(config)?,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds,
        outputs: outputs.to_vec(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), json).context("writing manifest")?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {path:?}"))
}
