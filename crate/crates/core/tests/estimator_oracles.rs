//! Independent oracles and simulation checks for the proportion estimator.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;

use swb_core::corpus::Signature;
use swb_core::estimator::solver::{objective, solve_simplex_ls};
use swb_core::estimator::synthetic::{mixture_trial, MixtureSetup, SyntheticGenerator};
use swb_core::estimator::{
    bootstrap_se, build_conditional, estimate_distribution, BootstrapSettings, ConditionalOptions,
};
use swb_core::rng::substream;
use swb_core::Category;

const TRUTH: [f64; 4] = [0.2, 0.5, 0.1, 0.2];

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Accelerated projected gradient on the same objective.
fn projected_gradient(q: &DMatrix<f64>, p: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let k = q.ncols();
    let h = q.transpose() * q + DMatrix::identity(k, k) * lambda;
    let g = q.transpose() * p;
    let lipschitz = 2.0 * h.symmetric_eigenvalues().max().max(1e-12);
    let mut x = DVector::from_element(k, 1.0 / k as f64);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = (&h * &y - &g) * 2.0;
        let next = project_simplex(&(&y - grad / lipschitz));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
    }
    x
}

fn l1(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn simplex_point(raw: &[f64]) -> DVector<f64> {
    let total: f64 = raw.iter().sum();
    DVector::from_iterator(raw.len(), raw.iter().map(|r| r / total))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_matches_projected_gradient(
        rows in 4usize..12,
        raw_q in proptest::collection::vec(0.01f64..1.0, 48),
        raw_p in proptest::collection::vec(0.01f64..1.0, 12),
        lambda in prop_oneof![Just(0.0), 1e-4f64..1e-1],
    ) {
        // column-stochastic Q over `rows` signatures
        let mut q = DMatrix::from_fn(rows, 4, |r, c| raw_q[(r * 4 + c) % raw_q.len()]);
        for mut col in q.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        let p = simplex_point(&raw_p[..rows]);
        let fast = solve_simplex_ls(&q, &p, lambda).unwrap();
        let slow = projected_gradient(&q, &p, lambda);
        let (fo, so) = (objective(&q, &p, lambda, &fast), objective(&q, &p, lambda, &slow));
        prop_assert!(fo <= so + 1e-10, "face enumeration {fo} vs projected gradient {so}");
        prop_assert!((fast.sum() - 1.0).abs() < 1e-9);
        prop_assert!(fast.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn exact_recovery_in_column_space(
        raw_q in proptest::collection::vec(0.01f64..1.0, 24),
        raw_pi in proptest::collection::vec(0.05f64..1.0, 4),
    ) {
        let mut q = DMatrix::from_fn(6, 4, |r, c| raw_q[r * 4 + c]);
        for mut col in q.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        prop_assume!(q.clone().svd(false, false).singular_values.min() > 1e-3);
        let pi = simplex_point(&raw_pi);
        let p = &q * &pi;
        let got = solve_simplex_ls(&q, &p, 0.0).unwrap();
        prop_assert!((got - pi).amax() < 1e-6);
    }

    #[test]
    fn order_and_duplication_invariance(seed in 0u64..1000, lambda in prop_oneof![Just(0.0), Just(1e-3)]) {
        let g = SyntheticGenerator::new(20, 0.3);
        let training = g.training(40, &mut substream(seed, "train", 0));
        let test = g.test(300, &TRUTH, &mut substream(seed, "test", 0));
        let q = build_conditional(&training, ConditionalOptions::default()).unwrap();
        let base = estimate_distribution(&q, &test, lambda).unwrap();
        let mut shuffled = test.clone();
        shuffled.shuffle(&mut substream(seed, "shuffle", 0));
        let doubled: Vec<Signature> = test.iter().chain(&test).cloned().collect();
        for other in [shuffled, doubled] {
            let e = estimate_distribution(&q, &other, lambda).unwrap();
            prop_assert!(l1(&e.proportions, &base.proportions) < 1e-9);
        }
        prop_assert!((base.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(base.proportions.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn offtopic_only_test_concentrates() {
    let g = SyntheticGenerator::new(60, 0.0);
    let training = g.training(500, &mut substream(0, "synthetic-training", 0));
    let test = g.test(10_000, &[0.0, 0.0, 0.0, 1.0], &mut substream(0, "synthetic-test", 0));
    let q = build_conditional(&training, ConditionalOptions::default()).unwrap();
    let est = estimate_distribution(&q, &test, 0.0).unwrap();
    assert!(est.get(Category::Offtopic) >= 0.95, "{:?}", est.proportions);
}

#[test]
fn mixture_recovers_generating_proportions() {
    let trials: Vec<(f64, f64)> = (0..20)
        .map(|seed| {
            let t = mixture_trial(MixtureSetup::default(), &TRUTH, seed).unwrap();
            (l1(&t.estimate.proportions, &TRUTH), l1(&t.baseline.proportions, &TRUTH))
        })
        .collect();
    let mean = trials.iter().map(|t| t.0).sum::<f64>() / trials.len() as f64;
    let wins = trials.iter().filter(|t| t.0 <= t.1).count();
    assert!(mean <= 0.05, "mean L1 {mean}");
    assert!(wins >= 16, "beat the baseline in {wins}/20 seeds");
}

#[test]
fn aggregation_beats_classify_and_count_across_seeds() {
    use rayon::prelude::*;
    let wins = (100..200u64)
        .into_par_iter()
        .filter(|&seed| {
            let t = mixture_trial(MixtureSetup::default(), &TRUTH, seed).unwrap();
            l1(&t.estimate.proportions, &TRUTH) <= l1(&t.baseline.proportions, &TRUTH)
        })
        .count();
    assert!(wins >= 80, "no worse than the baseline in {wins}/100 seeds");
}

#[test]
fn error_shrinks_with_test_size() {
    // training large enough that the test sample dominates the error
    let means: Vec<f64> = [1_000, 10_000, 100_000]
        .into_iter()
        .map(|n_test| {
            let setup = MixtureSetup {
                per_category: 20_000,
                n_test,
                ..MixtureSetup::default()
            };
            (0..20)
                .map(|seed| l1(&mixture_trial(setup, &TRUTH, seed).unwrap().estimate.proportions, &TRUTH))
                .sum::<f64>()
                / 20.0
        })
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn bootstrap_se_tracks_monte_carlo_spread() {
    let g = SyntheticGenerator::new(60, 0.3);
    let training = g.training(500, &mut substream(7, "synthetic-training", 0));
    let test = g.test(10_000, &TRUTH, &mut substream(7, "synthetic-test", 0));
    let settings = BootstrapSettings {
        options: ConditionalOptions::default(),
        lambda: 0.0,
        replicates: 200,
        seed: 7,
    };
    let boot = bootstrap_se(&training, &test, &settings).unwrap();
    let se = boot.standard_errors.unwrap();

    // fresh draws of the whole generator
    let sims: Vec<[f64; 4]> = (0..200)
        .map(|i| {
            mixture_trial(MixtureSetup::default(), &TRUTH, 10_000 + i)
                .unwrap()
                .estimate
                .proportions
        })
        .collect();
    for c in 0..4 {
        let mean = sims.iter().map(|s| s[c]).sum::<f64>() / sims.len() as f64;
        let sd = (sims.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / (sims.len() - 1) as f64).sqrt();
        let ratio = se[c] / sd;
        assert!((0.5..=2.0).contains(&ratio), "category {c}: bootstrap {} vs Monte Carlo {sd}", se[c]);
    }
}
