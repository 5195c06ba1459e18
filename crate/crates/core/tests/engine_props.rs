//! Property tests for the game engine and metric invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use oversight_core::engine::{
    agent_best_response, expected_welfare, kkt_best_response, prediction_explainer, stacked_qr,
    targeted_explainer, Explainer, PolicyRegime,
};
use oversight_core::linalg;
use oversight_core::objective::{expected_objective, QuadraticObjective};
use oversight_core::rng::rng_from;
use oversight_core::scenario::{FiniteMixture, MixtureComponent, ScenarioDistribution};
use oversight_core::train::auc;

fn pd_matrix(vals: &[f64], n: usize) -> DMatrix<f64> {
    let half = DMatrix::from_fn(n, n, |i, j| vals[(i * n + j) % vals.len()]);
    linalg::symmetrize(&(&half * half.transpose())) + DMatrix::identity(n, n) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expected_objective_weight_stays_psd(
        raw in prop::collection::vec(-1.0f64..1.0, 24),
        p in 0.05f64..0.95,
    ) {
        let n = 2;
        let w1 = pd_matrix(&raw[0..6], n);
        let w2 = pd_matrix(&raw[6..12], n);
        let draws = vec![
            (p, QuadraticObjective::new(DVector::from_row_slice(&raw[12..14]), w1).unwrap()),
            (1.0 - p, QuadraticObjective::new(DVector::from_row_slice(&raw[14..16]), w2).unwrap()),
        ];
        let e = expected_objective(&draws).unwrap();
        linalg::check_psd(e.weight(), 1e-8).unwrap();
    }

    #[test]
    fn stacked_qr_reconstructs_random_stacks(
        raw in prop::collection::vec(-1.0f64..1.0, 18),
    ) {
        let e_mat = DMatrix::from_row_slice(2, 6, &raw[0..12]);
        let a_mat = DMatrix::from_row_slice(1, 6, &raw[12..18]);
        let (Ok(e), Ok(a)) = (Explainer::new(e_mat.clone()), oversight_core::engine::Restriction::new(a_mat.clone())) else {
            return Ok(()); // degenerate draw
        };
        let Ok(fact) = stacked_qr(Some(&e), Some(&a)) else {
            return Ok(()); // redundant stack
        };
        let mut stack = DMatrix::zeros(3, 6);
        stack.view_mut((0, 0), (2, 6)).copy_from(&e_mat);
        stack.view_mut((2, 0), (1, 6)).copy_from(&a_mat);
        let mut zr = DMatrix::zeros(3, 6);
        zr.view_mut((0, 3), (3, 3)).copy_from(fact.r());
        let rebuilt = &zr * fact.q().transpose();
        let scale = linalg::max_abs(&stack).max(1e-12);
        prop_assert!(linalg::max_abs(&(&rebuilt - &stack)) <= 1e-8 * scale);
    }

    #[test]
    fn best_response_agrees_with_kkt(
        raw in prop::collection::vec(-1.0f64..1.0, 40),
        n in 2usize..6,
    ) {
        let weight = pd_matrix(&raw[0..12], n);
        let agent = QuadraticObjective::new(
            DVector::from_fn(n, |i, _| raw[12 + i]),
            weight,
        ).unwrap();
        let e_mat = DMatrix::from_fn(1, n, |_, j| raw[20 + j]);
        let Ok(e) = Explainer::new(e_mat) else { return Ok(()); };
        let target = DVector::from_row_slice(&raw[30..31]);
        let f = agent_best_response(&agent, Some((&e, &target)), None).unwrap();
        let f_kkt = kkt_best_response(&agent, Some((&e, &target)), None).unwrap();
        prop_assert!((&f - &f_kkt).norm() <= 1e-8 * (1.0 + f_kkt.norm()));
        // Feasibility of the analytic solution.
        prop_assert!((e.matrix() * &f - &target).norm() <= 1e-8);
    }

    #[test]
    fn auc_invariant_under_increasing_transforms(
        scores in prop::collection::vec(-3.0f64..3.0, 20),
        labels in prop::collection::vec(0u8..2, 20),
        scale in 0.1f64..3.0,
    ) {
        let labels: Vec<f64> = labels.into_iter().map(f64::from).collect();
        let pos = labels.iter().filter(|&&y| y > 0.5).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let a1 = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|&s| (scale * s).tanh()).collect();
        let a2 = auc(&squashed, &labels).unwrap();
        prop_assert!((a1 - a2).abs() <= 1e-12);
    }
}

fn random_common_weight_instance(seed: u64, n: usize) -> (ScenarioDistribution, DMatrix<f64>) {
    let mut rng = rng_from(seed);
    let half = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let weight = linalg::symmetrize(&(&half * half.transpose())) + DMatrix::identity(n, n);
    let n_comp = n + 3;
    let comps: Vec<MixtureComponent> = (0..n_comp)
        .map(|_| {
            let w = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let gap = DVector::from_fn(n, |_, _| rng.random_range(-0.6..0.6));
            MixtureComponent {
                probability: 1.0 / n_comp as f64,
                principal: QuadraticObjective::new(w.clone(), weight.clone()).unwrap(),
                agent: QuadraticObjective::new(w + gap, weight.clone()).unwrap(),
                cell_weights: None,
            }
        })
        .collect();
    (
        ScenarioDistribution::new(Box::new(FiniteMixture::new(comps).unwrap())),
        weight,
    )
}

/// Audit ordering on random instances: no audit <= prediction-explainer
/// audit <= targeted-explainer audit, within Monte Carlo slack.
#[test]
fn prediction_audit_between_no_audit_and_targeted() {
    for trial in 0..20u64 {
        let n = 3 + (trial as usize % 3);
        let k = 1 + (trial as usize % 2);
        let (dist, weight) = random_common_weight_instance(500 + trial, n);
        let moments = dist.moments().unwrap();
        let mean = &moments.mean_principal_bliss;
        let second = &moments.var_principal_bliss + mean * mean.transpose();
        let pred = prediction_explainer(&second, &weight, k).unwrap();
        let tgt = targeted_explainer(&dist, &weight, k, 0, 0).unwrap().explainer;
        let draws = 20_000;
        let seed = 42;
        let (none, se_n) =
            expected_welfare(&PolicyRegime::no_regulation(), &dist, draws, seed).unwrap();
        let (pw, se_p) =
            expected_welfare(&PolicyRegime::explainer_audit(pred), &dist, draws, seed).unwrap();
        let (tw, se_t) =
            expected_welfare(&PolicyRegime::explainer_audit(tgt), &dist, draws, seed).unwrap();
        assert!(
            none <= pw + 3.0 * (se_n + se_p) + 1e-9,
            "trial {trial}: no-audit {none} vs prediction {pw}"
        );
        assert!(
            pw <= tw + 3.0 * (se_p + se_t) + 1e-9,
            "trial {trial}: prediction {pw} vs targeted {tw}"
        );
    }
}

/// The restriction decision rule agrees with the exhaustive regime search on
/// the two diagnostic instances: ample state variance (never restrict) and
/// tiny variance with a large uncaptured gap (restriction wins).
#[test]
fn restriction_rule_matches_regime_search() {
    use oversight_core::engine::{exante_recommended, search_restriction_dims};

    let n = 2;
    let weight = DMatrix::identity(n, n);
    let build = |bliss_scale: f64, gap1: f64, gap2: f64| {
        let w4 = [
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![-1.0, 1.0]),
            DVector::from_vec(vec![-1.0, -1.0]),
        ];
        let g4 = [
            DVector::from_vec(vec![gap1, 0.0]),
            DVector::from_vec(vec![-gap1, 0.0]),
            DVector::from_vec(vec![0.0, gap2]),
            DVector::from_vec(vec![0.0, -gap2]),
        ];
        let comps: Vec<MixtureComponent> = w4
            .iter()
            .zip(&g4)
            .map(|(w, g)| MixtureComponent {
                probability: 0.25,
                principal: QuadraticObjective::new(w * bliss_scale, weight.clone()).unwrap(),
                agent: QuadraticObjective::new(w * bliss_scale + g, weight.clone()).unwrap(),
                cell_weights: None,
            })
            .collect();
        ScenarioDistribution::new(Box::new(FiniteMixture::new(comps).unwrap()))
    };

    // Var(w_bar) = I with weighted gap eigenvalues (0.5, 0.1): rule says no
    // restriction, and the search finds none that improves.
    let ample = build(1.0, 0.5f64.sqrt() * 2.0f64.sqrt(), 0.1f64.sqrt() * 2.0f64.sqrt());
    assert!(!exante_recommended(&ample, &weight, 1, 0, 0).unwrap());
    let evals = search_restriction_dims(&ample, &weight, 1, 20_000, 77).unwrap();
    for e in &evals[1..] {
        assert!(
            e.mean_welfare <= evals[0].mean_welfare + 3.0 * (evals[0].std_error + e.std_error),
            "restriction m={} should not improve: {} vs {}",
            e.restricted_dims,
            e.mean_welfare,
            evals[0].mean_welfare
        );
    }

    // Var(w_bar) = 1e-4 I with gap eigenvalues (10, 9): rule flags a
    // restriction, and the search confirms one strictly helps.
    let starved = build(1e-2, 10.0f64.sqrt() * 2.0f64.sqrt(), 9.0f64.sqrt() * 2.0f64.sqrt());
    assert!(exante_recommended(&starved, &weight, 1, 0, 0).unwrap());
    let evals = search_restriction_dims(&starved, &weight, 1, 20_000, 77).unwrap();
    let improved = evals[1..].iter().any(|e| {
        e.mean_welfare > evals[0].mean_welfare + 3.0 * (evals[0].std_error + e.std_error)
    });
    assert!(improved, "expected some restriction to strictly improve: {evals:?}");
}
