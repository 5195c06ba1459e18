//! Theory experiments: closed-form tables, Monte Carlo regime comparisons,
//! decision-rule condition checks, and explainer synthesis.

use anyhow::{anyhow, Result};
use std::path::Path;

use oversight_core::closed_form::{self, RegimeTag, Scenario};
use oversight_core::engine;
use oversight_core::linalg;

use crate::config::{parse_scenario, DistributionConfig, NamedRegime, TwoVarParamsDto};
use crate::csvio::{fmt_f64, Table};

fn scenario_list(names: &[String]) -> Result<Vec<Scenario>> {
    if names.is_empty() {
        return Ok(Scenario::ALL.to_vec());
    }
    names.iter().map(|s| parse_scenario(s)).collect()
}

pub fn closed_form(
    params: &TwoVarParamsDto,
    scenarios: &[String],
    out_dir: &Path,
) -> Result<Vec<String>> {
    let params = params.to_core();
    let mut table = Table::new(&["scenario", "regime", "welfare", "note"]);
    for scenario in scenario_list(scenarios)? {
        for tag in RegimeTag::ALL {
            let (welfare, note) = match closed_form::closed_form_welfare(scenario, tag, &params) {
                Ok(w) => (fmt_f64(w), String::new()),
                Err(_) if tag == RegimeTag::OutcomeAudit => (
                    String::new(),
                    "no closed form; outcome audits are evaluated by simulation".into(),
                ),
                Err(e) => return Err(anyhow!("closed form {}/{}: {e}", scenario.label(), tag.label())),
            };
            table.push(vec![
                scenario.label().into(),
                tag.label().into(),
                welfare,
                note,
            ]);
        }
    }
    table.write(&out_dir.join("closed_form.csv"))?;
    Ok(vec!["closed_form.csv".into()])
}

pub fn monte_carlo(
    params: Option<&TwoVarParamsDto>,
    scenarios: &[String],
    distribution: Option<&DistributionConfig>,
    regimes: &[NamedRegime],
    draws: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    match (params, distribution) {
        (Some(p), None) => monte_carlo_two_var(p, scenarios, draws, seed, out_dir),
        (None, Some(d)) => monte_carlo_general(d, regimes, draws, seed, out_dir),
        _ => Err(anyhow!(
            "theory mc needs exactly one of `params` (two-variable world) or \
             `distribution` + `regimes`"
        )),
    }
}

fn monte_carlo_general(
    distribution: &DistributionConfig,
    regimes: &[NamedRegime],
    draws: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    if regimes.is_empty() {
        return Err(anyhow!("general Monte Carlo needs at least one regime"));
    }
    let dist = distribution.to_distribution()?;
    let mut table = Table::new(&["regime", "mean_welfare", "std_error", "n_samples", "seed"]);
    for named in regimes {
        let regime = named.regime.to_regime()?;
        let (mean, se) = engine::expected_welfare(&regime, &dist, draws, seed)
            .map_err(|e| anyhow!("welfare under {}: {e}", named.name))?;
        table.push(vec![
            named.name.clone(),
            fmt_f64(mean),
            fmt_f64(se),
            draws.to_string(),
            seed.to_string(),
        ]);
    }
    table.write(&out_dir.join("mc_general.csv"))?;
    Ok(vec!["mc_general.csv".into()])
}

fn monte_carlo_two_var(
    params: &TwoVarParamsDto,
    scenarios: &[String],
    draws: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    let params = params.to_core();
    let mut outputs = vec![];
    for scenario in scenario_list(scenarios)? {
        let world = closed_form::embed_as_general(scenario, &params)
            .map_err(|e| anyhow!("embedding {}: {e}", scenario.label()))?;
        let mut table = Table::new(&["regime", "mean_welfare", "std_error", "n_samples", "seed"]);
        for tag in RegimeTag::ALL {
            let regime = world
                .regime(tag)
                .map_err(|e| anyhow!("regime {}: {e}", tag.label()))?;
            let (mean, se) = engine::expected_welfare(&regime, &world.dist, draws, seed)
                .map_err(|e| anyhow!("welfare {}/{}: {e}", scenario.label(), tag.label()))?;
            table.push(vec![
                tag.label().into(),
                fmt_f64(mean),
                fmt_f64(se),
                draws.to_string(),
                seed.to_string(),
            ]);
        }
        let name = format!("mc_{}.csv", scenario.label());
        table.write(&out_dir.join(&name))?;
        outputs.push(name);
    }
    Ok(outputs)
}

pub fn conditions(
    distribution: &DistributionConfig,
    k: usize,
    n_samples: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    let dist = distribution.to_distribution()?;
    let moments = dist
        .misalignment_moments(n_samples, seed)
        .map_err(|e| anyhow!("misalignment moments: {e}"))?;
    let first_best = engine::first_best_achievable(&dist, k, n_samples, seed)
        .map_err(|e| anyhow!("first-best check: {e}"))?;
    let mut table = Table::new(&["quantity", "value", "note"]);
    table.push(vec!["dim".into(), dist.dim().to_string(), String::new()]);
    table.push(vec!["k".into(), k.to_string(), String::new()]);
    table.push(vec![
        "rank_gap".into(),
        moments.rank_gap.to_string(),
        String::new(),
    ]);
    table.push(vec![
        "first_best_achievable".into(),
        (first_best as u8).to_string(),
        String::new(),
    ]);
    match dist.fixed_common_weight() {
        Some(weight) => {
            let recommended = engine::exante_recommended(&dist, &weight, k, n_samples, seed)
                .map_err(|e| anyhow!("restriction check: {e}"))?;
            let (root, _) = linalg::sqrt_and_inv_sqrt_pd(&weight, linalg::PINV_TOL)
                .map_err(|e| anyhow!("weight root: {e}"))?;
            let var_w = linalg::symmetrize(&(&root * &moments.var_principal_bliss * &root));
            let gap_w = linalg::symmetrize(&(&root * &moments.second_moment_gap * &root));
            let (var_vals, _) = linalg::sym_eigen_desc(&var_w);
            let (gap_vals, _) = linalg::sym_eigen_desc(&gap_w);
            let n = var_vals.len();
            table.push(vec![
                "exante_recommended".into(),
                (recommended as u8).to_string(),
                String::new(),
            ]);
            table.push(vec![
                "lambda_min_var_weighted_bliss".into(),
                fmt_f64(var_vals[n - 1]),
                String::new(),
            ]);
            table.push(vec![
                "lambda_k_plus_1_weighted_gap".into(),
                fmt_f64(if k < n { gap_vals[k] } else { 0.0 }),
                String::new(),
            ]);
        }
        None => {
            table.push(vec![
                "exante_recommended".into(),
                String::new(),
                "weights vary across states; restriction rule undefined".into(),
            ]);
        }
    }
    table.write(&out_dir.join("conditions.csv"))?;
    Ok(vec!["conditions.csv".into()])
}

pub fn explainers(
    distribution: &DistributionConfig,
    k: usize,
    n_samples: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    let dist = distribution.to_distribution()?;
    let n = dist.dim();
    let weight = dist
        .fixed_common_weight()
        .or_else(|| dist.model().fixed_agent_weight())
        .unwrap_or_else(|| nalgebra::DMatrix::identity(n, n));
    let targeted = engine::targeted_explainer(&dist, &weight, k, n_samples, seed)
        .map_err(|e| anyhow!("targeted explainer: {e}"))?;
    let moments = dist
        .misalignment_moments(n_samples, seed)
        .map_err(|e| anyhow!("moments: {e}"))?;
    // Prediction explainer for the principal's bliss: second moment
    // Var(w) + mean mean'.
    let dist_moments = dist
        .moments()
        .ok_or_else(|| anyhow!("prediction explainer needs analytic moments"))?;
    let mean = &dist_moments.mean_principal_bliss;
    let second = &dist_moments.var_principal_bliss + mean * mean.transpose();
    let prediction = engine::prediction_explainer(&second, &weight, k)
        .map_err(|e| anyhow!("prediction explainer: {e}"))?;

    let mut header = vec!["explainer".to_string(), "row".to_string()];
    for j in 0..n {
        header.push(format!("c{j}"));
    }
    let mut table = Table {
        header,
        rows: vec![],
    };
    let mut push_rows = |name: &str, matrix: &nalgebra::DMatrix<f64>| {
        for i in 0..matrix.nrows() {
            let mut row = vec![name.to_string(), (i + 1).to_string()];
            for j in 0..n {
                row.push(fmt_f64(matrix[(i, j)]));
            }
            table.rows.push(row);
        }
    };
    push_rows("prediction", prediction.matrix());
    push_rows(
        if targeted.degenerate {
            "targeted_degenerate"
        } else {
            "targeted"
        },
        targeted.explainer.matrix(),
    );
    table.write(&out_dir.join("explainers.csv"))?;

    let mut rank_table = Table::new(&["quantity", "value"]);
    rank_table.push(vec!["rank_gap".into(), moments.rank_gap.to_string()]);
    rank_table.write(&out_dir.join("explainer_rank.csv"))?;
    Ok(vec!["explainers.csv".into(), "explainer_rank.csv".into()])
}
