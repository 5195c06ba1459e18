//! Acceptance suite, reproducibility half: manifests replay byte-identically
//! and the comparison tool's exit codes behave as documented.

use std::path::{Path, PathBuf};
use std::process::Command;

fn oversight() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oversight"))
}

fn run_ok(args: &[&str]) {
    let out = oversight().args(args).output().expect("spawn oversight");
    assert!(
        out.status.success(),
        "oversight {args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_outputs(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().and_then(|x| x.to_str()) == Some("csv")).then_some(p)
        })
        .collect();
    files.sort();
    files
}

fn assert_byte_identical(dir_a: &Path, dir_b: &Path) {
    let a_files = csv_outputs(dir_a);
    assert!(!a_files.is_empty(), "no CSV outputs in {dir_a:?}");
    for a in a_files {
        let name = a.file_name().unwrap();
        let b = dir_b.join(name);
        let bytes_a = std::fs::read(&a).unwrap();
        let bytes_b = std::fs::read(&b).unwrap_or_else(|_| panic!("{b:?} missing"));
        assert_eq!(bytes_a, bytes_b, "{name:?} differs between run and replay");
    }
}

fn replay_case(name: &str, args: &[&str]) -> (PathBuf, PathBuf) {
    let base = tempfile::tempdir().unwrap().keep();
    let first = base.join(format!("{name}_run"));
    let second = base.join(format!("{name}_replay"));
    let mut full: Vec<String> = args.iter().map(ToString::to_string).collect();
    full.push("--out".into());
    full.push(first.to_str().unwrap().into());
    run_ok(&full.iter().map(String::as_str).collect::<Vec<_>>());
    let manifest = first.join("manifest.json");
    assert!(manifest.exists(), "manifest missing for {name}");
    run_ok(&[
        "replay",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    (first, second)
}

/// Criterion 9: three representative experiments replay byte-identically
/// from their manifests.
#[test]
fn criterion_9_manifest_replay_byte_identical() {
    let cases: Vec<(&str, Vec<&str>)> = vec![
        (
            "closed_form",
            vec!["theory", "closed-form", "--scenario", "lending"],
        ),
        (
            "theory_mc",
            vec![
                "theory", "mc", "--scenario", "lending", "--scenario", "hiring", "--draws",
                "20000", "--seed", "7",
            ],
        ),
        (
            "data_generate",
            vec![
                "data",
                "generate",
                "--preset-credit",
                "--rows",
                "2000",
                "--seed",
                "3",
            ],
        ),
    ];
    for (name, args) in cases {
        let (first, second) = replay_case(name, &args);
        assert_byte_identical(&first, &second);
        println!("ACCEPTANCE criterion 9 [{name}]: PASS (byte-identical replay)");
    }
}

#[test]
fn closed_form_lending_has_five_regime_rows() {
    let out = tempfile::tempdir().unwrap().keep();
    run_ok(&[
        "theory",
        "closed-form",
        "--scenario",
        "lending",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(out.join("closed_form.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 5, "expected one row per regime: {text}");
    assert!(text.contains("no_regulation"));
    assert!(text.contains("outcome_audit"));
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap().keep();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let c = dir.join("c.csv");
    std::fs::write(&a, "name,value\nx,1.0\ny,2.0\n").unwrap();
    std::fs::write(&b, "name,value\nx,1.0\ny,2.0\n").unwrap();
    std::fs::write(&c, "name,value\nx,1.0\ny,2.5\n").unwrap();

    // Identical: exit 0.
    let out = oversight()
        .args([
            "report",
            "compare",
            "--a",
            a.to_str().unwrap(),
            "--b",
            b.to_str().unwrap(),
            "--out",
            dir.join("cmp_ok").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    // Out of tolerance: exit 2 (numeric failure), diff written.
    let out = oversight()
        .args([
            "report",
            "compare",
            "--a",
            a.to_str().unwrap(),
            "--b",
            c.to_str().unwrap(),
            "--tol-abs",
            "0.1",
            "--out",
            dir.join("cmp_fail").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.join("cmp_fail/diff.csv").exists());

    // Schema mismatch: exit 1 (validation error).
    std::fs::write(&c, "other,value\nx,1.0\n").unwrap();
    let out = oversight()
        .args([
            "report",
            "compare",
            "--a",
            a.to_str().unwrap(),
            "--b",
            c.to_str().unwrap(),
            "--out",
            dir.join("cmp_schema").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn closed_form_and_mc_agree_via_compare_tool() {
    // The oracle-equivalence workflow as users run it: emit both lending
    // tables and diff the welfare column against the Monte Carlo standard
    // errors.
    let dir = tempfile::tempdir().unwrap().keep();
    run_ok(&[
        "theory",
        "mc",
        "--scenario",
        "lending",
        "--draws",
        "50000",
        "--seed",
        "12",
        "--out",
        dir.join("mc").to_str().unwrap(),
    ]);
    // Build an "expected" table in the same schema from the closed forms.
    run_ok(&[
        "theory",
        "closed-form",
        "--scenario",
        "lending",
        "--out",
        dir.join("cf").to_str().unwrap(),
    ]);
    let mc = std::fs::read_to_string(dir.join("mc/mc_lending.csv")).unwrap();
    let cf = std::fs::read_to_string(dir.join("cf/closed_form.csv")).unwrap();
    let mc_rows: Vec<Vec<&str>> = mc.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let cf_rows: Vec<Vec<&str>> = cf.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // Mirror the Monte Carlo table, substituting analytic welfare values.
    let mut expected = String::from("regime,mean_welfare,std_error,n_samples,seed\n");
    for row in &mc_rows {
        let regime = row[0];
        let analytic = cf_rows
            .iter()
            .find(|r| r[1] == regime && !r[2].is_empty())
            .map(|r| r[2]);
        match analytic {
            Some(v) => expected.push_str(&format!(
                "{regime},{v},{}{}",
                row[2..].join(","),
                "\n"
            )),
            None => expected.push_str(&format!("{}\n", row.join(","))),
        }
    }
    std::fs::write(dir.join("expected.csv"), expected).unwrap();
    let out = oversight()
        .args([
            "report",
            "compare",
            "--a",
            dir.join("expected.csv").to_str().unwrap(),
            "--b",
            dir.join("mc/mc_lending.csv").to_str().unwrap(),
            "--se-column",
            "std_error",
            "--se-factor",
            "3.0",
            "--tol-abs",
            "1e-9",
            "--out",
            dir.join("cmp").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "closed form vs Monte Carlo disagreed:\n{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn general_distribution_regime_json_interface() {
    // A two-point mixture and an explicit regime document exercise the
    // JSON wire formats end to end.
    let dir = tempfile::tempdir().unwrap().keep();
    let dist = serde_json::json!({
        "kind": "mixture",
        "dim": 2,
        "components": [
            {"probability": 0.5, "principal_bliss": [0.0, 1.0], "agent_bliss": [0.5, 1.0]},
            {"probability": 0.5, "principal_bliss": [2.0, 3.0], "agent_bliss": [2.5, 3.0]}
        ]
    });
    let regimes = serde_json::json!([
        {"name": "unregulated"},
        {"name": "pin_first_coordinate",
         "explainer": {"matrix": {"rows": 1, "cols": 2, "data": [1.0, 0.0]},
                        "target": "principal_draw"}}
    ]);
    std::fs::write(dir.join("dist.json"), dist.to_string()).unwrap();
    std::fs::write(dir.join("regimes.json"), regimes.to_string()).unwrap();
    run_ok(&[
        "theory",
        "mc",
        "--distribution",
        dir.join("dist.json").to_str().unwrap(),
        "--regimes",
        dir.join("regimes.json").to_str().unwrap(),
        "--draws",
        "5000",
        "--seed",
        "4",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("out/mc_general.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    // The gap is entirely along the first coordinate, so pinning it attains
    // first best while no regulation pays the squared gap (0.25).
    let unreg: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let pinned: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((unreg + 0.25).abs() < 1e-9, "unregulated welfare {unreg}");
    assert!(pinned.abs() < 1e-9, "pinned welfare {pinned}");
}

#[test]
fn conditions_and_explainer_commands() {
    let dir = tempfile::tempdir().unwrap().keep();
    let dist = serde_json::json!({
        "kind": "two_var",
        "scenario": "lending",
        "params": {
            "alpha": 0.1, "beta": 0.5, "gamma": 0.4, "delta": 0.2, "p": 0.3,
            "sigma0": 2.0, "sigma1": 1.2, "sigma2": 1.1, "sigma3": 0.5,
            "delta_overall": 0.1, "delta_hu": 0.2,
            "group_means": [0.3, 0.15, 0.3, 0.15]
        },
        "type_jitter": {"sd_overall": 0.2, "sd_hu": 0.3}
    });
    std::fs::write(dir.join("dist.json"), dist.to_string()).unwrap();
    run_ok(&[
        "theory",
        "conditions",
        "--distribution",
        dir.join("dist.json").to_str().unwrap(),
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        dir.join("cond").to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("cond/conditions.csv")).unwrap();
    assert!(text.contains("rank_gap,2"), "{text}");
    assert!(text.contains("first_best_achievable,1"), "{text}");

    run_ok(&[
        "theory",
        "explainer",
        "--distribution",
        dir.join("dist.json").to_str().unwrap(),
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        dir.join("expl").to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("expl/explainers.csv")).unwrap();
    assert_eq!(text.lines().count(), 5, "two rows per explainer: {text}");
}

#[test]
fn shift_and_deploy_metrics_flow() {
    let dir = tempfile::tempdir().unwrap().keep();
    // Small process so the flow stays fast.
    let dgp = serde_json::json!({
        "n_rows": 3000,
        "n_cols": 8,
        "true_coefficients": [0.8, -0.6, 0.5, 0.4, 0.0, 0.3, 0.0, 0.2],
        "interactions": [[0, 1, 0.4]],
        "base_default_rate": 0.2,
        "minority_rate": 0.25,
        "minority_shifts": [[0, 0.7], [2, 0.5]],
        "common_factor_loading": 0.2,
        "subprime_quantile": 0.12,
        "seed": 21
    });
    std::fs::write(dir.join("dgp.json"), dgp.to_string()).unwrap();
    let shift = serde_json::json!({
        "covariate_mean_shifts": [[0, 0.8]],
        "minority_only": true
    });
    std::fs::write(dir.join("shift.json"), shift.to_string()).unwrap();
    run_ok(&[
        "data",
        "generate",
        "--config",
        dir.join("dgp.json").to_str().unwrap(),
        "--out",
        dir.join("data").to_str().unwrap(),
    ]);
    run_ok(&[
        "data",
        "shift",
        "--config",
        dir.join("dgp.json").to_str().unwrap(),
        "--shift",
        dir.join("shift.json").to_str().unwrap(),
        "--seed",
        "22",
        "--out",
        dir.join("deploy").to_str().unwrap(),
    ]);
    run_ok(&[
        "train",
        "--case",
        "di",
        "--arch",
        "logit",
        "--data",
        dir.join("data").to_str().unwrap(),
        "--deploy",
        dir.join("deploy/deploy.csv").to_str().unwrap(),
        "--lambda",
        "0.1",
        "--seed",
        "9",
        "--epochs",
        "30",
        "--logit-cols",
        "6",
        "--k-explainer",
        "4",
        "--out",
        dir.join("train").to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("train/metrics.csv")).unwrap();
    assert!(text.starts_with(
        "case,arch,regime,auc,log_loss,delta_log_odds,deploy_auc,deploy_log_loss,deploy_delta_log_odds"
    ));
    // A minority-targeted risk shift raises the fixed model's deployment
    // disparity relative to its test disparity.
    let lender = text.lines().find(|l| l.contains(",lender,")).unwrap();
    let cells: Vec<&str> = lender.split(',').collect();
    let test_delta: f64 = cells[5].parse().unwrap();
    let deploy_delta: f64 = cells[8].parse().unwrap();
    assert!(
        deploy_delta > test_delta,
        "deployment disparity {deploy_delta} should exceed test disparity {test_delta}"
    );
    // Model parameter files exist for every row.
    assert!(dir.join("train/models/logit_lender.json").exists());
}
