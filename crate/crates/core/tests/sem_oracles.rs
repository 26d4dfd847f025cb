//! Simulation and finite-difference oracles for the SEM fitter.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use swb_core::rng::substream;
use swb_core::sem::{
    build_panel, builtin_swb_model, fit_ml, implied_covariance, implied_covariance_jacobian, ml_discrepancy,
    ml_gradient, parse_model, EconSeries, Frequency, ParamKind, SemModel, YearMonth,
};

/// Generating values for the built-in model, keyed by (kind, lhs, rhs).
fn builtin_truth(kind: ParamKind, lhs: &str, rhs: &str) -> f64 {
    let pair = |a: &str, b: &str| (lhs == a && rhs == b) || (lhs == b && rhs == a);
    match kind {
        ParamKind::Loading => match lhs {
            "swb" => 0.85,
            "gdp" => 0.8,
            "unemp" => -0.6,
            "cons" => 0.7,
            "inv" => 0.6,
            other => panic!("unexpected loading {other}"),
        },
        ParamKind::Regression => match rhs {
            "Economy" => 0.4,
            "le40" => -0.3,
            other => panic!("unexpected regression {other}"),
        },
        ParamKind::Covariance => {
            if pair("gdp", "le40") {
                0.1
            } else if pair("gdp", "cons") {
                0.1
            } else if pair("gdp", "inv") {
                0.05
            } else if pair("gdp", "unemp") {
                -0.1
            } else {
                panic!("unexpected covariance {lhs} {rhs}")
            }
        }
        ParamKind::Variance => match lhs {
            "gdp" => 0.36,
            "unemp" => 0.64,
            "cons" => 0.51,
            "inv" => 0.64,
            "le40" => 1.0,
            other => panic!("unexpected variance {other}"),
        },
    }
}

fn theta_from(model: &SemModel, value: impl Fn(ParamKind, &str, &str) -> f64) -> Vec<f64> {
    model
        .parameters()
        .iter()
        .filter(|p| p.free)
        .map(|p| value(p.kind, &p.lhs, &p.rhs))
        .collect()
}

/// Draws `n` observations by running the path equations forward:
/// every variable is its parents' weighted sum plus a disturbance, with
/// disturbances jointly normal with the model's residual (co)variances.
fn simulate(model: &SemModel, theta: &[f64], n: usize, seed: u64) -> DMatrix<f64> {
    let k = model.n_vars();
    let mut a = DMatrix::zeros(k, k);
    let mut s0 = DMatrix::zeros(k, k);
    let mut free = theta.iter();
    for p in model.parameters() {
        let v = if p.free { *free.next().unwrap() } else { p.value };
        let (i, j) = (model.index_of(&p.lhs), model.index_of(&p.rhs));
        match p.kind {
            ParamKind::Loading | ParamKind::Regression => a[(i, j)] = v,
            ParamKind::Covariance => {
                s0[(i, j)] = v;
                s0[(j, i)] = v;
            }
            ParamKind::Variance => s0[(i, i)] = v,
        }
    }
    let chol = s0.cholesky().expect("residual covariance PD").l();
    let lu = (DMatrix::identity(k, k) - a).lu();
    let p = model.observed().len();
    let mut rng = substream(seed, "sem-simulation", 0);
    let mut data = DMatrix::zeros(n, p);
    for r in 0..n {
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = lu.solve(&(&chol * z)).unwrap();
        for c in 0..p {
            data[(r, c)] = v[c];
        }
    }
    data
}

fn sample_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let means = data.row_mean();
    let mut centred = data.clone();
    for mut row in centred.row_iter_mut() {
        row -= &means;
    }
    centred.transpose() * &centred / (n - 1) as f64
}

fn relative_gap(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).amax() / analytic.amax().max(numeric.amax()).max(1.0)
}

#[test]
fn builtin_parameters_are_recovered_from_simulation() {
    let model = builtin_swb_model();
    let truth = theta_from(&model, builtin_truth);
    let data = simulate(&model, &truth, 10_000, 11);
    let fit = fit_ml(&model, &sample_covariance(&data), 10_000).unwrap();
    assert!(fit.converged, "{:?}", fit.diagnostics);
    assert!(fit.gradient_max_norm < 1e-6);
    let free: Vec<_> = fit.parameters.iter().filter(|p| p.free).collect();
    assert_eq!(free.len(), truth.len());
    for (est, want) in free.iter().zip(&truth) {
        let se = est.se.expect("standard error available");
        let tol = (3.0 * se).max(0.05);
        assert!(
            (est.estimate - want).abs() <= tol,
            "{:?} {} {}: {} vs {want} (tol {tol})",
            est.kind,
            est.lhs,
            est.rhs,
            est.estimate
        );
    }
}

#[test]
fn one_factor_loadings_are_recovered() {
    let model = parse_model("F =~ a + b + c + d").unwrap();
    let loadings = [0.9, 0.8, 0.7, 0.6];
    let truth = theta_from(&model, |kind, lhs, _| {
        let i = ["a", "b", "c", "d"].iter().position(|v| *v == lhs).unwrap();
        match kind {
            ParamKind::Loading => loadings[i],
            ParamKind::Variance => 1.0 - loadings[i] * loadings[i],
            _ => unreachable!(),
        }
    });

    // population covariance: exact recovery
    let exact = fit_ml(&model, &implied_covariance(&model, &truth).unwrap(), 10_000).unwrap();
    for (est, want) in exact.theta.iter().zip(&truth) {
        assert!((est - want).abs() < 1e-4, "{est} vs {want}");
    }

    let data = simulate(&model, &truth, 10_000, 3);
    let fit = fit_ml(&model, &sample_covariance(&data), 10_000).unwrap();
    for (name, want) in ["a", "b", "c", "d"].iter().zip(loadings) {
        let got = fit.get(ParamKind::Loading, name, "F").unwrap().estimate;
        assert!((got - want).abs() <= 0.05, "{name}: {got} vs {want}");
    }
}

#[test]
fn saturated_model_reaches_zero_discrepancy() {
    let model = parse_model("y ~ x1 + x2\nx1 ~~ x2").unwrap();
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 1.2, -0.4, 0.2, -0.4, 0.9]);
    let fit = fit_ml(&model, &s, 200).unwrap();
    assert_eq!(fit.degrees_of_freedom, 0);
    assert!(fit.discrepancy.abs() <= 1e-8, "F = {}", fit.discrepancy);
}

#[test]
fn fit_is_invariant_to_observed_order() {
    let model = builtin_swb_model();
    let truth = theta_from(&model, builtin_truth);
    let data = simulate(&model, &truth, 2_000, 5);
    let s = sample_covariance(&data);
    let base = fit_ml(&model, &s, 2_000).unwrap();

    let order: Vec<String> = ["le40", "inv", "swb", "cons", "gdp", "unemp"].iter().map(|s| s.to_string()).collect();
    let permuted_model = model.with_observed_order(&order).unwrap();
    let perm: Vec<usize> = order.iter().map(|n| model.index_of(n)).collect();
    let permuted_s = DMatrix::from_fn(6, 6, |i, j| s[(perm[i], perm[j])]);
    let other = fit_ml(&permuted_model, &permuted_s, 2_000).unwrap();

    assert!((base.discrepancy - other.discrepancy).abs() <= 1e-9);
    for (a, b) in base.parameters.iter().zip(&other.parameters) {
        assert_eq!((a.kind, &a.lhs, &a.rhs), (b.kind, &b.lhs, &b.rhs));
        assert!((a.estimate - b.estimate).abs() <= 1e-9, "{} {}: {} vs {}", a.lhs, a.rhs, a.estimate, b.estimate);
    }
}

#[test]
fn rescaling_a_raw_column_leaves_the_fit_unchanged() {
    let model = builtin_swb_model();
    let truth = theta_from(&model, builtin_truth);
    let data = simulate(&model, &truth, 240, 9);
    let start = YearMonth::new(2000, 1).unwrap();
    let months: Vec<YearMonth> = YearMonth::range(start, YearMonth::from_ordinal(start.ordinal() + 239)).collect();
    let series_with = |scale: f64| -> Vec<EconSeries> {
        model
            .observed()
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let factor = if name == "gdp" { scale } else { 1.0 };
                let obs = months.iter().enumerate().map(|(r, m)| (*m, data[(r, c)] * factor + 3.0)).collect();
                EconSeries::new(name.clone(), Frequency::Monthly, obs).unwrap()
            })
            .collect()
    };
    let fit_of = |scale: f64| {
        let panel = build_panel(&series_with(scale), None).unwrap();
        fit_ml(&model, &panel.covariance(model.observed()).unwrap(), panel.n()).unwrap()
    };
    let (a, b) = (fit_of(1.0), fit_of(1000.0));
    for (x, y) in a.theta.iter().zip(&b.theta) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jacobian_matches_central_differences(raw in proptest::collection::vec(-0.9f64..0.9, 16)) {
        let model = builtin_swb_model();
        // keep variances positive
        let theta: Vec<f64> = model
            .parameters()
            .iter()
            .filter(|p| p.free)
            .zip(&raw)
            .map(|(p, r)| if p.kind == ParamKind::Variance { 0.3 + r.abs() } else { *r })
            .collect();
        let analytic = implied_covariance_jacobian(&model, &theta).unwrap();
        let h = 1e-6;
        for (k, d) in analytic.iter().enumerate() {
            let mut plus = theta.clone();
            plus[k] += h;
            let mut minus = theta.clone();
            minus[k] -= h;
            let numeric = (implied_covariance(&model, &plus).unwrap() - implied_covariance(&model, &minus).unwrap()) / (2.0 * h);
            prop_assert!(relative_gap(d, &numeric) <= 1e-5, "parameter {k}");
        }
    }

    #[test]
    fn discrepancy_gradient_matches_central_differences(seed in 0u64..1000) {
        let model = builtin_swb_model();
        let truth = theta_from(&model, builtin_truth);
        let s = sample_covariance(&simulate(&model, &truth, 500, seed));
        let mut rng = substream(seed, "perturb", 0);
        let theta: Vec<f64> = truth.iter().map(|t| t + rng.random_range(-0.05..0.05)).collect();
        let g = ml_gradient(&model, &theta, &s).unwrap();
        let h = 1e-6;
        let numeric = DVector::from_fn(theta.len(), |k, _| {
            let mut plus = theta.clone();
            plus[k] += h;
            let mut minus = theta.clone();
            minus[k] -= h;
            (ml_discrepancy(&model, &plus, &s).unwrap() - ml_discrepancy(&model, &minus, &s).unwrap()) / (2.0 * h)
        });
        let gap = (&g - &numeric).amax() / g.amax().max(numeric.amax()).max(1.0);
        prop_assert!(gap <= 1e-5, "gap {gap}");
    }

    #[test]
    fn discrepancy_is_nonnegative(seed in 0u64..1000) {
        let model = builtin_swb_model();
        let truth = theta_from(&model, builtin_truth);
        let s = sample_covariance(&simulate(&model, &truth, 300, seed));
        let mut rng = substream(seed, "perturb", 1);
        let theta: Vec<f64> = truth.iter().map(|t| t + rng.random_range(-0.1..0.1)).collect();
        if let Some(f) = ml_discrepancy(&model, &theta, &s) {
            prop_assert!(f >= -1e-12);
        }
    }
}
