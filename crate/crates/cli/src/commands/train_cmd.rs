//! The regime-training experiment: fits the four-regime comparison and
//! writes the metrics table, coefficient tables, and model parameters.

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use oversight_core::train::{
    extract_explanation, run_regimes, Arch, MetricsReport, OptimSettings, RegimeRunConfig,
};

use crate::config::{parse_archs, parse_case, TrainConfig};
use crate::csvio::{fmt_f64, read_dataset, Table};

#[derive(Debug, Serialize, Deserialize)]
struct ModelDto {
    arch: String,
    hidden: Option<(usize, usize)>,
    input_dim: usize,
    input_cols: Option<Vec<usize>>,
    seed: u64,
    params: Vec<f64>,
}

fn regime_filter(requested: &[String]) -> Result<Option<BTreeSet<String>>> {
    if requested.is_empty() {
        return Ok(None);
    }
    let mut set = BTreeSet::new();
    for r in requested {
        let canonical = match r.as_str() {
            "lender" => "lender",
            "regulator" => "regulator",
            "pred-explainer" | "pred_explainer" => "pred_explainer",
            "targeted-explainer" | "targeted_explainer" => "targeted_explainer",
            other => bail!("unknown regime {other:?}"),
        };
        set.insert(canonical.to_string());
    }
    Ok(Some(set))
}

fn metrics_table(report: &MetricsReport, filter: Option<&BTreeSet<String>>, with_deploy: bool) -> Table {
    let mut header = vec!["case", "arch", "regime", "auc", "log_loss", "delta_log_odds"];
    if with_deploy {
        header.extend(["deploy_auc", "deploy_log_loss", "deploy_delta_log_odds"]);
    }
    let mut table = Table::new(&header);
    for row in &report.rows {
        if let Some(f) = filter {
            if !f.contains(&row.regime) {
                continue;
            }
        }
        let mut cells = vec![
            row.case.clone(),
            row.arch.clone(),
            row.regime.clone(),
            fmt_f64(row.auc),
            fmt_f64(row.log_loss),
            fmt_f64(row.delta_log_odds),
        ];
        if with_deploy {
            cells.push(row.deploy_auc.map(fmt_f64).unwrap_or_default());
            cells.push(row.deploy_log_loss.map(fmt_f64).unwrap_or_default());
            cells.push(row.deploy_delta_log_odds.map(fmt_f64).unwrap_or_default());
        }
        table.push(cells);
    }
    table
}

pub fn train(config: &TrainConfig, out_dir: &Path) -> Result<Vec<String>> {
    let case = parse_case(&config.case)?;
    let archs = parse_archs(&config.arch)?;
    let filter = regime_filter(&config.regimes)?;

    let data_dir = Path::new(&config.data);
    let train_data = read_dataset(&data_dir.join("train.csv"))?;
    let test_data = read_dataset(&data_dir.join("test.csv"))?;
    let deploy = match &config.deploy {
        Some(path) => {
            let raw = read_dataset(Path::new(path))?;
            // Deployment data arrives in base-generation units; move it into
            // the train split's units when both scalers are known.
            Some(match raw.in_units_of(&train_data) {
                Ok(converted) => converted,
                Err(_) => raw,
            })
        }
        None => None,
    };

    let mut run = RegimeRunConfig::new(case, config.seed);
    run.archs = archs;
    run.k_explainer = config.k_explainer;
    run.logit_cols = config.logit_cols;
    run.lambda = config.lambda;
    run.eta = config.eta;
    run.optimizer = config.optimizer.to_core();
    run.calibration_optimizer = config.calibration_epochs.map(|epochs| OptimSettings {
        epochs,
        ..config.optimizer.to_core()
    });
    let report = run_regimes(&run, &train_data, &test_data, deploy.as_ref())
        .map_err(|e| anyhow!("regime training: {e}"))?;

    let mut outputs = vec![];
    let metrics = metrics_table(&report, filter.as_ref(), deploy.is_some());
    metrics.write(&out_dir.join("metrics.csv"))?;
    outputs.push("metrics.csv".to_string());

    // Run metadata: calibrated multiplier and the selected variable sets.
    let mut meta = Table::new(&["quantity", "value"]);
    meta.push(vec!["lambda".into(), fmt_f64(report.lambda)]);
    meta.push(vec![
        "prediction_vars".into(),
        report
            .prediction_vars
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    ]);
    meta.push(vec![
        "targeted_vars".into(),
        report
            .targeted_vars
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    ]);
    meta.write(&out_dir.join("run_meta.csv"))?;
    outputs.push("run_meta.csv".to_string());

    // Explainer-coefficient tables, one per architecture: rows are the union
    // of explainer variables, columns the regime models under each explainer.
    let arch_labels: BTreeSet<String> = report.models.iter().map(|m| m.arch.clone()).collect();
    for arch in &arch_labels {
        let mut header = vec!["variable".to_string()];
        let models: Vec<_> = report.models.iter().filter(|m| &m.arch == arch).collect();
        for kind in ["prediction", "targeted"] {
            for m in &models {
                header.push(format!("{kind}_{}", m.regime));
            }
        }
        let mut table = Table {
            header,
            rows: vec![],
        };
        let var_sets = [&report.prediction_vars, &report.targeted_vars];
        let mut all_vars: Vec<usize> = var_sets
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        all_vars.insert(0, usize::MAX); // intercept sentinel
        let mut coeff_cache: Vec<Vec<Vec<f64>>> = vec![];
        for vars in var_sets {
            let mut per_model = vec![];
            for m in &models {
                per_model.push(
                    extract_explanation(&m.model, &train_data, vars)
                        .map_err(|e| anyhow!("explanation for {}: {e}", m.regime))?,
                );
            }
            coeff_cache.push(per_model);
        }
        for &var in &all_vars {
            let name = if var == usize::MAX {
                "intercept".to_string()
            } else {
                train_data
                    .column_names
                    .get(var)
                    .cloned()
                    .unwrap_or_else(|| format!("x{var}"))
            };
            let mut row = vec![name];
            for (set_idx, vars) in var_sets.iter().enumerate() {
                for (mi, _) in models.iter().enumerate() {
                    let coeffs = &coeff_cache[set_idx][mi];
                    let cell = if var == usize::MAX {
                        fmt_f64(coeffs[0])
                    } else {
                        match vars.iter().position(|&v| v == var) {
                            Some(pos) => fmt_f64(coeffs[pos + 1]),
                            None => String::new(),
                        }
                    };
                    row.push(cell);
                }
            }
            table.push(row);
        }
        let name = format!("explainer_coeffs_{arch}.csv");
        table.write(&out_dir.join(&name))?;
        outputs.push(name);
    }

    // Model-coefficient table for the logistic class (the network has no
    // per-variable coefficients).
    let logit_models: Vec<_> = report.models.iter().filter(|m| m.arch == "logit").collect();
    if !logit_models.is_empty() {
        let cols = logit_models[0]
            .model
            .input_cols
            .clone()
            .unwrap_or_else(|| (0..train_data.n_cols()).collect());
        let mut header = vec!["variable".to_string()];
        header.extend(logit_models.iter().map(|m| m.regime.clone()));
        let mut table = Table {
            header,
            rows: vec![],
        };
        let mut push_row = |name: String, values: Vec<f64>| {
            let mut row = vec![name];
            row.extend(values.into_iter().map(fmt_f64));
            table.rows.push(row);
        };
        push_row(
            "intercept".into(),
            logit_models
                .iter()
                .map(|m| m.model.params()[cols.len()])
                .collect(),
        );
        for (slot, &col) in cols.iter().enumerate() {
            push_row(
                train_data
                    .column_names
                    .get(col)
                    .cloned()
                    .unwrap_or_else(|| format!("x{col}")),
                logit_models.iter().map(|m| m.model.params()[slot]).collect(),
            );
        }
        table.write(&out_dir.join("model_coeffs_logit.csv"))?;
        outputs.push("model_coeffs_logit.csv".to_string());
    }

    // Persist every fitted model.
    let model_dir = out_dir.join("models");
    std::fs::create_dir_all(&model_dir)?;
    for fitted in &report.models {
        let hidden = match fitted.model.arch {
            Arch::Logistic => None,
            Arch::Mlp { hidden } => Some(hidden),
        };
        let dto = ModelDto {
            arch: fitted.arch.clone(),
            hidden,
            input_dim: fitted.model.input_dim,
            input_cols: fitted.model.input_cols.clone(),
            seed: fitted.model.seed,
            params: fitted.model.params().to_vec(),
        };
        let name = format!("models/{}_{}.json", fitted.arch, fitted.regime);
        std::fs::write(out_dir.join(&name), serde_json::to_string(&dto)?)?;
        outputs.push(name);
    }
    Ok(outputs)
}
