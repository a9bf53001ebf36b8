//! Simulation checks of the fitting stack: chi-square calibration, BIC
//! preference, greedy augmentation behaviour, and likelihood nesting.

use tetram::fit::{bic, chi_square, fit_ml, greedy_bidirected};
use tetram::fixtures;
use tetram::graph::{EdgeLabel, MeasurementPattern, TrueDag};
use tetram::sem::{random_sem, sample, sample_covariance};

fn two_block_pattern() -> MeasurementPattern {
    let mut p = MeasurementPattern::new();
    for i in 1..=3 {
        p.add_directed("L1", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    for i in 4..=6 {
        p.add_directed("L2", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    p
}

/// Two pure blocks plus an extra hidden cause of (Y2, Y5).
fn residual_pair_dag() -> TrueDag {
    let mut b = TrueDag::builder();
    let x1 = b.latent("X1");
    let x2 = b.latent("X2");
    let z = b.latent("Z");
    b.edge(x1, x2);
    let ys: Vec<_> = (1..=6).map(|i| b.observed(&format!("Y{i}"))).collect();
    for y in &ys[0..3] {
        b.edge(x1, *y);
    }
    for y in &ys[3..6] {
        b.edge(x2, *y);
    }
    b.edge(z, ys[1]).edge(z, ys[4]);
    b.build().unwrap()
}

#[test]
fn chi_square_calibration() {
    // statistic's empirical mean within 10% of df under the true pattern
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let pattern = two_block_pattern();
    let reps = 500usize;
    let mut sum = 0.0;
    let mut used = 0usize;
    for seed in 0..reps as u64 {
        let data = sample(&sem, 500, 60_000 + seed).unwrap();
        let cov = sample_covariance(&data).unwrap();
        let fitted = fit_ml(&pattern, &cov).unwrap();
        if !fitted.converged {
            continue;
        }
        let (stat, df, _) = chi_square(&fitted, &pattern).unwrap();
        assert_eq!(df, 8);
        sum += stat;
        used += 1;
    }
    assert!(
        used > reps * 9 / 10,
        "too many non-convergent fits: {used}/{reps}"
    );
    let mean = sum / used as f64;
    assert!(
        (mean - 8.0).abs() <= 0.8,
        "chi-square mean {mean:.3} should be within 10% of df = 8"
    );
}

#[test]
fn chi_square_requires_positive_df() {
    // saturated-equivalent pattern: df 0 -> chi-square refuses
    let mut p = MeasurementPattern::new();
    p.add_directed("L1", "Y1", EdgeLabel::Confirmed);
    p.add_directed("L1", "Y2", EdgeLabel::Confirmed);
    p.add_directed("L1", "Y3", EdgeLabel::Confirmed);
    assert_eq!(tetram::fit::degrees_of_freedom(&p).unwrap(), 0);
    let sem = random_sem(&fixtures::one_factor_dag(3), 3, 0.5, 1.5, 0.5).unwrap();
    let cov = sample_covariance(&sample(&sem, 500, 1).unwrap()).unwrap();
    let fitted = fit_ml(&p, &cov).unwrap();
    assert!(chi_square(&fitted, &p).is_err());
    // and the statistic vanishes for the saturated model
    assert!(
        fitted.discrepancy.abs() < 1e-6,
        "F = {}",
        fitted.discrepancy
    );
}

#[test]
fn bic_prefers_true_pattern_over_spurious_edge() {
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let plain = two_block_pattern();
    let mut with_edge = plain.clone();
    with_edge.add_bidirected("Y1", "Y4", EdgeLabel::Unconfirmed);
    let mut wins = 0usize;
    let seeds = 50;
    for seed in 0..seeds as u64 {
        let data = sample(&sem, 1000, 70_000 + seed).unwrap();
        let cov = sample_covariance(&data).unwrap();
        let a = bic(&fit_ml(&plain, &cov).unwrap());
        let b = bic(&fit_ml(&with_edge, &cov).unwrap());
        if a < b {
            wins += 1;
        }
    }
    assert!(
        wins >= seeds * 8 / 10,
        "true pattern won only {wins}/{seeds}"
    );
}

#[test]
fn generating_pattern_beats_one_cluster_collapse() {
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let generating = two_block_pattern();
    let mut collapsed = MeasurementPattern::new();
    for i in 1..=6 {
        collapsed.add_directed("L1", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    let data = sample(&sem, 1000, 123).unwrap();
    let cov = sample_covariance(&data).unwrap();
    let a = fit_ml(&generating, &cov).unwrap();
    let b = fit_ml(&collapsed, &cov).unwrap();
    assert!(
        a.log_likelihood > b.log_likelihood,
        "generating {} vs collapsed {}",
        a.log_likelihood,
        b.log_likelihood
    );
}

#[test]
fn greedy_finds_the_real_residual_pair() {
    let dag = residual_pair_dag();
    let sem = random_sem(&dag, 11, 0.5, 1.5, 0.5).unwrap();
    let pattern = two_block_pattern();
    let mut exact = 0usize;
    let seeds = 50;
    for seed in 0..seeds as u64 {
        let data = sample(&sem, 2000, 80_000 + seed).unwrap();
        let cov = sample_covariance(&data).unwrap();
        let (augmented, report) = greedy_bidirected(&pattern, &cov, 1).unwrap();
        let added: Vec<_> = report.added;
        if added == vec![("Y2".to_string(), "Y5".to_string())]
            && augmented.bidirected_edges().count() == 1
        {
            exact += 1;
        }
    }
    assert!(
        exact >= seeds * 8 / 10,
        "exact recovery in only {exact}/{seeds}"
    );
}

#[test]
fn greedy_adds_nothing_on_pure_data() {
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let pattern = two_block_pattern();
    let mut clean = 0usize;
    let seeds = 50;
    for seed in 0..seeds as u64 {
        let data = sample(&sem, 2000, 90_000 + seed).unwrap();
        let cov = sample_covariance(&data).unwrap();
        let (_, report) = greedy_bidirected(&pattern, &cov, 1).unwrap();
        if report.added.is_empty() {
            clean += 1;
        }
    }
    assert!(clean >= seeds * 8 / 10, "no-edge runs: {clean}/{seeds}");
}

#[test]
fn nesting_never_decreases_likelihood() {
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let plain = two_block_pattern();
    for seed in 0..10u64 {
        let data = sample(&sem, 400, 95_000 + seed).unwrap();
        let cov = sample_covariance(&data).unwrap();
        let base = fit_ml(&plain, &cov).unwrap();
        let mut bigger = plain.clone();
        bigger.add_bidirected("Y2", "Y5", EdgeLabel::Unconfirmed);
        let nested = fit_ml(&bigger, &cov).unwrap();
        assert!(
            nested.log_likelihood >= base.log_likelihood - 1e-4,
            "seed {seed}: {} < {}",
            nested.log_likelihood,
            base.log_likelihood
        );
    }
}

#[test]
fn fit_invariant_to_variable_permutation() {
    let sem = fixtures::fixture_sem("two_block").unwrap();
    let data = sample(&sem, 800, 7).unwrap();
    let cov = sample_covariance(&data).unwrap();
    // same pattern declared in two observed orders
    let mut a = MeasurementPattern::new();
    for i in [1, 2, 3] {
        a.add_directed("L1", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    for i in [4, 5, 6] {
        a.add_directed("L2", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    let mut b = MeasurementPattern::new();
    for i in [6, 5, 4] {
        b.add_directed("L2", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    for i in [3, 2, 1] {
        b.add_directed("L1", &format!("Y{i}"), EdgeLabel::Confirmed);
    }
    let fa = fit_ml(&a, &cov).unwrap();
    let fb = fit_ml(&b, &cov).unwrap();
    // same discrepancy and BIC up to optimizer tolerance; the anchor child
    // differs per declaration order, so loadings are compared via ratios
    assert!((fa.discrepancy - fb.discrepancy).abs() < 1e-5);
    assert!((bic(&fa) - bic(&fb)).abs() < 1e-2);
}
