//! Data-generation experiments: synthetic datasets, splits, deployment
//! shifts.

use anyhow::{anyhow, Result};
use std::path::Path;

use oversight_core::datagen;

use crate::config::{DgpConfigDto, ShiftSpecDto};
use crate::csvio::write_dataset;
use crate::manifest;

pub fn generate(
    dgp: &DgpConfigDto,
    train_fraction: f64,
    split_seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    let config = dgp.to_core();
    let sha = manifest::config_sha256(&crate::config::ExperimentConfig::DataGenerate {
        dgp: dgp.clone(),
        train_fraction,
        split_seed,
    })?;
    let data = datagen::generate(&config).map_err(|e| anyhow!("generate: {e}"))?;
    let (train, test) =
        datagen::split(&data, train_fraction, split_seed).map_err(|e| anyhow!("split: {e}"))?;
    write_dataset(out_dir, "dataset", &data, config.seed, &sha)?;
    write_dataset(out_dir, "train", &train, split_seed, &sha)?;
    write_dataset(out_dir, "test", &test, split_seed, &sha)?;
    Ok(vec![
        "dataset.csv".into(),
        "dataset.meta.json".into(),
        "train.csv".into(),
        "train.meta.json".into(),
        "test.csv".into(),
        "test.meta.json".into(),
    ])
}

pub fn shift(
    dgp: &DgpConfigDto,
    spec: &ShiftSpecDto,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    let config = dgp.to_core();
    let sha = manifest::config_sha256(&crate::config::ExperimentConfig::DataShift {
        dgp: dgp.clone(),
        shift: spec.clone(),
        seed,
    })?;
    let deploy =
        datagen::shift(&config, &spec.to_core(), seed).map_err(|e| anyhow!("shift: {e}"))?;
    write_dataset(out_dir, "deploy", &deploy, seed, &sha)?;
    Ok(vec!["deploy.csv".into(), "deploy.meta.json".into()])
}
