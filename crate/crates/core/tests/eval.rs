mod common;

use common::*;
use malearn::eval::{auroc, auroc_ci, mean_ci, select_model, select_with_mode, BootstrapOptions, Candidate, SelectionMode, AUROC_FRACTION};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn both_classes(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auroc_matches_pairwise(scores in prop::collection::vec(0u8..8, 2..60), seed: u64) {
        let mut r = rng(seed);
        let labels: Vec<u8> = scores.iter().map(|_| r.gen_range(0..2)).collect();
        prop_assume!(both_classes(&labels));
        let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
        prop_assert!((auroc(&s, &labels).unwrap() - pairwise_auroc(&s, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn auroc_invariant_to_increasing_transforms(scores in prop::collection::vec(-5.0f64..5.0, 2..60), seed: u64) {
        let mut r = rng(seed);
        let labels: Vec<u8> = scores.iter().map(|_| r.gen_range(0..2)).collect();
        prop_assume!(both_classes(&labels));
        let base = auroc(&scores, &labels).unwrap();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        prop_assert!((auroc(&cubed, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((auroc(&squashed, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn negated_scores_complement(seed: u64, n in 2usize..80) {
        let mut r = rng(seed);
        let scores: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let labels: Vec<u8> = (0..n).map(|_| r.gen_range(0..2)).collect();
        prop_assume!(both_classes(&labels));
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auroc(&scores, &labels).unwrap() + auroc(&neg, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_respects_threshold_and_is_stable(
        table in prop::collection::vec((0usize..4, 0.5f64..1.0, prop::sample::select(vec![0.0, 0.001, 0.1, 0.3, 0.7])), 1..12),
        drop in 0usize..12,
    ) {
        let alphas = [0.0, 0.01, 0.1, 1.0];
        let candidates: Vec<Candidate<usize>> =
            table.iter().enumerate().map(|(k, &(a, auc, rho))| Candidate::new(k, alphas[a], vec![auc], vec![rho])).collect();
        let result = select_model(candidates.clone()).unwrap();
        let chosen = result.chosen();
        let max = candidates.iter().map(|c| c.cv_auroc).fold(f64::MIN, f64::max);
        prop_assert!(chosen.cv_auroc >= AUROC_FRACTION * max);
        prop_assert!(candidates.iter().all(|c| c.cv_auroc < AUROC_FRACTION * max || c.cv_rho >= chosen.cv_rho));

        let drop = drop % candidates.len();
        let max_holder = candidates.iter().any(|c| c.params == drop && c.cv_auroc == max);
        if candidates.len() > 1 && drop != chosen.params && !max_holder {
            let rest: Vec<_> = candidates.iter().filter(|c| c.params != drop).cloned().collect();
            prop_assert_eq!(select_model(rest).unwrap().chosen().params, chosen.params);
        }

        let inf = select_with_mode(candidates.clone(), SelectionMode::AlphaInf).unwrap();
        if candidates.iter().any(|c| c.cv_rho <= 0.005) {
            prop_assert!(inf.chosen().cv_rho <= 0.005);
        }
    }
}

#[test]
fn alpha_zero_mode_needs_an_unregularized_candidate() {
    let c = |k: usize, alpha: f64, auc: f64| Candidate::new(k, alpha, vec![auc], vec![0.1]);
    let r = select_with_mode(vec![c(0, 0.1, 0.9), c(1, 0.0, 0.7)], SelectionMode::AlphaZero).unwrap();
    assert_eq!(r.chosen().params, 1);
    assert!(select_with_mode(vec![c(0, 0.1, 0.9)], SelectionMode::AlphaZero).is_err());
}

#[test]
fn bootstrap_width_scales_with_root_n() {
    let opts = |seed| BootstrapOptions { b: 1000, level: 0.95, seed };
    let width = |n: usize, rep: u64| {
        let mut r = rng(1000 + rep * 7 + n as u64);
        let labels: Vec<u8> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let scores: Vec<f64> = labels.iter().map(|&y| y as f64 + r.sample::<f64, _>(StandardNormal)).collect();
        let reliance: Vec<u8> = (0..n).map(|_| (r.gen::<f64>() < 0.3) as u8).collect();
        let a = auroc_ci(&scores, &labels, &opts(rep)).unwrap();
        let m = mean_ci(&reliance, &opts(rep)).unwrap();
        (a.hi - a.lo, m.hi - m.lo)
    };
    let reps = 20;
    let mean_width = |n| {
        let w: Vec<(f64, f64)> = (0..reps).map(|k| width(n, k)).collect();
        (w.iter().map(|x| x.0).sum::<f64>() / reps as f64, w.iter().map(|x| x.1).sum::<f64>() / reps as f64)
    };
    let (small, large) = (mean_width(400), mean_width(800));
    for (s, l) in [(small.0, large.0), (small.1, large.1)] {
        let ratio = s / l;
        assert!((1.25..=1.6).contains(&ratio), "width ratio {ratio}");
    }
}

#[test]
fn intervals_are_reproducible_per_seed() {
    let mut r = rng(12);
    let labels: Vec<u8> = (0..200).map(|_| r.gen_range(0..2)).collect();
    let scores: Vec<f64> = (0..200).map(|_| r.gen::<f64>()).collect();
    let o = |seed| BootstrapOptions { b: 500, level: 0.9, seed };
    assert_eq!(auroc_ci(&scores, &labels, &o(1)).unwrap(), auroc_ci(&scores, &labels, &o(1)).unwrap());
    assert_ne!(auroc_ci(&scores, &labels, &o(1)).unwrap(), auroc_ci(&scores, &labels, &o(2)).unwrap());
}
