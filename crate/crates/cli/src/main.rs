//! Batch front door for the oversight experiments.
//!
//! Subcommands map one-to-one onto experiment kinds; every run writes its
//! outputs plus a `manifest.json` that `replay` can re-execute
//! byte-identically. Exit codes: 0 success, 1 validation error, 2 numeric
//! failure (a completed comparison outside tolerances).

mod commands;
mod config;
mod csvio;
mod manifest;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use config::{
    CompareConfig, DgpConfigDto, DistributionConfig, ExperimentConfig, OptimDto, ShiftSpecDto,
    TrainConfig, TwoVarParamsDto,
};

#[derive(Parser)]
#[command(
    name = "oversight",
    about = "Regulation-of-prediction-algorithms experiments: theory tables, Monte Carlo \
             regime comparisons, synthetic credit data, constrained training, report diffs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and Monte Carlo theory experiments.
    Theory {
        #[command(subcommand)]
        cmd: TheoryCmd,
    },
    /// Synthetic dataset generation and deployment shifts.
    Data {
        #[command(subcommand)]
        cmd: DataCmd,
    },
    /// Regime training on generated data (four-regime metrics table).
    Train(TrainArgs),
    /// Report utilities.
    Report {
        #[command(subcommand)]
        cmd: ReportCmd,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-execute the experiment recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TheoryCmd {
    /// Analytic welfare table for the two-variable world.
    ClosedForm {
        /// Parameter JSON; built-in defaults when omitted.
        #[arg(long)]
        params: Option<String>,
        /// medical|lending|hiring (repeatable; all when omitted).
        #[arg(long)]
        scenario: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo welfare table with standard errors.
    Mc {
        /// Two-variable-world parameter JSON (scenario tables).
        #[arg(long)]
        params: Option<String>,
        #[arg(long)]
        scenario: Vec<String>,
        /// General path: scenario-distribution JSON...
        #[arg(long, conflicts_with = "params")]
        distribution: Option<String>,
        /// ...plus a JSON array of named regime documents.
        #[arg(long, requires = "distribution")]
        regimes: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Misalignment-rank / restriction-condition checks for a distribution.
    Conditions {
        /// Scenario-distribution JSON document.
        #[arg(long)]
        distribution: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prediction and targeted explainer matrices for a distribution.
    Explainer {
        #[arg(long)]
        distribution: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DataCmd {
    /// Generate a dataset plus a seeded train/test split.
    Generate {
        /// DGP config JSON; `--preset-credit` builds the default process.
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value_t = false)]
        preset_credit: bool,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a shifted deployment dataset.
    Shift {
        #[arg(long)]
        config: String,
        #[arg(long)]
        shift: String,
        /// Deployment draw seed (defaults to the DGP seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// di | subprime
    #[arg(long)]
    case: String,
    /// logit | mlp | both
    #[arg(long, default_value = "both")]
    arch: String,
    /// lender | regulator | pred-explainer | targeted-explainer (repeatable;
    /// all four when omitted).
    #[arg(long)]
    regime: Vec<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    eta: f64,
    #[arg(long, default_value_t = 10)]
    k_explainer: usize,
    #[arg(long, default_value_t = 20)]
    logit_cols: usize,
    #[arg(long)]
    seed: u64,
    /// Directory holding train.csv / test.csv.
    #[arg(long)]
    data: String,
    /// Optional deployment dataset CSV.
    #[arg(long)]
    deploy: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    calibration_epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Cell-by-cell comparison of two CSV reports with tolerances.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0.0)]
        tol_abs: f64,
        #[arg(long, default_value_t = 0.0)]
        tol_rel: f64,
        /// Column of `b` holding per-row standard errors.
        #[arg(long)]
        se_column: Option<String>,
        #[arg(long, default_value_t = 3.0)]
        se_factor: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_params(path: &Option<String>) -> Result<TwoVarParamsDto> {
    match path {
        Some(p) => config::read_json(p),
        None => Ok(TwoVarParamsDto::lending_default()),
    }
}

fn build_experiment(command: Command) -> Result<(ExperimentConfig, PathBuf)> {
    Ok(match command {
        Command::Theory { cmd } => match cmd {
            TheoryCmd::ClosedForm {
                params,
                scenario,
                out,
            } => (
                ExperimentConfig::TheoryClosedForm {
                    params: load_params(&params)?,
                    scenarios: scenario,
                },
                out,
            ),
            TheoryCmd::Mc {
                params,
                scenario,
                distribution,
                regimes,
                draws,
                seed,
                out,
            } => {
                let (params, dist, regime_list) = match distribution {
                    Some(d) => {
                        let dist: DistributionConfig = config::read_json(&d)?;
                        let regimes_path =
                            regimes.context("--distribution requires --regimes")?;
                        let list: Vec<config::NamedRegime> = config::read_json(&regimes_path)?;
                        (None, Some(dist), list)
                    }
                    None => (Some(load_params(&params)?), None, vec![]),
                };
                (
                    ExperimentConfig::TheoryMc {
                        params,
                        scenarios: scenario,
                        distribution: dist,
                        regimes: regime_list,
                        draws,
                        seed,
                    },
                    out,
                )
            }
            TheoryCmd::Conditions {
                distribution,
                k,
                samples,
                seed,
                out,
            } => {
                let dist: DistributionConfig = config::read_json(&distribution)?;
                (
                    ExperimentConfig::TheoryConditions {
                        distribution: dist,
                        k,
                        n_samples: samples,
                        seed,
                    },
                    out,
                )
            }
            TheoryCmd::Explainer {
                distribution,
                k,
                samples,
                seed,
                out,
            } => {
                let dist: DistributionConfig = config::read_json(&distribution)?;
                (
                    ExperimentConfig::TheoryExplainer {
                        distribution: dist,
                        k,
                        n_samples: samples,
                        seed,
                    },
                    out,
                )
            }
        },
        Command::Data { cmd } => match cmd {
            DataCmd::Generate {
                config: cfg,
                preset_credit,
                rows,
                seed,
                train_fraction,
                split_seed,
                out,
            } => {
                let dgp: DgpConfigDto = match (cfg, preset_credit) {
                    (Some(path), false) => config::read_json(&path)?,
                    (None, true) => {
                        let rows = rows.context("--preset-credit needs --rows")?;
                        let seed = seed.context("--preset-credit needs --seed")?;
                        DgpConfigDto::from_core(
                            &oversight_core::datagen::DgpConfig::default_credit(rows, seed),
                        )
                    }
                    _ => bail!("pass exactly one of --config or --preset-credit"),
                };
                let split_seed = split_seed.unwrap_or(dgp.seed);
                (
                    ExperimentConfig::DataGenerate {
                        dgp,
                        train_fraction,
                        split_seed,
                    },
                    out,
                )
            }
            DataCmd::Shift {
                config: cfg,
                shift,
                seed,
                out,
            } => {
                let dgp: DgpConfigDto = config::read_json(&cfg)?;
                let spec: ShiftSpecDto = config::read_json(&shift)?;
                let seed = seed.unwrap_or(dgp.seed);
                (
                    ExperimentConfig::DataShift {
                        dgp,
                        shift: spec,
                        seed,
                    },
                    out,
                )
            }
        },
        Command::Train(args) => {
            let mut optimizer = OptimDto::default();
            if let Some(e) = args.epochs {
                optimizer.epochs = e;
            }
            if let Some(b) = args.batch_size {
                optimizer.batch_size = b;
            }
            if let Some(s) = args.step_size {
                optimizer.step_size = s;
            }
            (
                ExperimentConfig::Train(TrainConfig {
                    case: args.case,
                    arch: args.arch,
                    regimes: args.regime,
                    lambda: args.lambda,
                    eta: args.eta,
                    k_explainer: args.k_explainer,
                    logit_cols: args.logit_cols,
                    optimizer,
                    calibration_epochs: args.calibration_epochs,
                    seed: args.seed,
                    data: args.data,
                    deploy: args.deploy,
                }),
                args.out,
            )
        }
        Command::Report { cmd } => match cmd {
            ReportCmd::Compare {
                a,
                b,
                tol_abs,
                tol_rel,
                se_column,
                se_factor,
                out,
            } => (
                ExperimentConfig::ReportCompare(CompareConfig {
                    a,
                    b,
                    tol_abs,
                    tol_rel,
                    se_column,
                    se_factor,
                }),
                out,
            ),
        },
        Command::Run { config: path, out } => {
            let experiment: ExperimentConfig = config::read_json(&path)?;
            (experiment, out)
        }
        Command::Replay { manifest, out } => {
            let m = manifest::read_manifest(std::path::Path::new(&manifest))?;
            (m.config, out)
        }
    })
}

fn main() {
    let cli = Cli::parse();
    let code = match build_experiment(cli.command) {
        Ok((experiment, out)) => match commands::execute(&experiment, &out) {
            Ok(()) => 0,
            Err(e) if e.is::<commands::NumericFailure>() => {
                eprintln!("{e:#}");
                2
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
