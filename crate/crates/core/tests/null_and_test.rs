mod common;

use common::{gaussian, line, random_metric_sample, rng, scale, uniform_three};
use dcov_core::centering::double_center;
use dcov_core::estimators::PairedSample;
use dcov_core::hypothesis::{run_test, Estimator, TestConfig, ThresholdMethod};
use dcov_core::kernels::h2_empirical_matrix;
use dcov_core::nulldist::{bootstrap_null, quantile, spectral_eigenvalues, spectral_null, SpectralLaw};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn eigenvalues_sum_to_centered_diagonal() {
    let mut r = rng(201);
    for _ in 0..50 {
        let n = r.random_range(2..40);
        let s = random_metric_sample(&mut r, n);
        let model = spectral_eigenvalues(&s, SpectralLaw::U).unwrap();
        let a = double_center(s.a());
        let b = double_center(s.b());
        let diag: f64 = (0..n).map(|i| a.get(i, i) * b.get(i, i)).sum::<f64>() / n as f64;
        assert!((model.trace - diag).abs() <= 1e-10 * scale(&s));
        assert!((model.eigen_sum - diag).abs() <= 1e-9 * scale(&s));
    }
}

#[test]
fn spectral_matrix_is_psd_on_metric_marginals() {
    let mut r = rng(202);
    for _ in 0..30 {
        let n = r.random_range(2..30);
        let s = random_metric_sample(&mut r, n);
        let model = spectral_eigenvalues(&s, SpectralLaw::V).unwrap();
        let top = model.lambdas.iter().cloned().fold(0.0, f64::max);
        assert!(model.lambdas.iter().all(|&l| l >= -1e-9 * (1.0 + top)));
    }
}

#[test]
fn bootstrap_h2_rows_sum_to_zero() {
    // the empirical second-order projection is canonical: E_k H[k][l] = 0
    let mut r = rng(203);
    for _ in 0..20 {
        let n = r.random_range(2..25);
        let s = random_metric_sample(&mut r, n);
        let h = h2_empirical_matrix(s.a(), s.b());
        for l in 0..n {
            let col: f64 = (0..n).map(|k| h.get(k, l)).sum();
            assert!(col.abs() <= 1e-9 * scale(&s) * n as f64, "column {l}: {col}");
        }
    }
}

#[test]
fn v_law_is_u_law_shifted() {
    let mut r = rng(204);
    let s = PairedSample::new(line(&gaussian(&mut r, 30)), line(&gaussian(&mut r, 30))).unwrap();
    let u = spectral_null(&s, SpectralLaw::U, 200, 9).unwrap();
    let v = spectral_null(&s, SpectralLaw::V, 200, 9).unwrap();
    let shift = spectral_eigenvalues(&s, SpectralLaw::V).unwrap().shift;
    for (a, b) in u.draws().iter().zip(v.draws()) {
        assert!((a + shift - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn null_draws_are_sorted_and_reproducible() {
    let mut r = rng(205);
    let s = PairedSample::new(line(&uniform_three(&mut r, 40)), line(&uniform_three(&mut r, 40))).unwrap();
    let a = bootstrap_null(&s, 150, 3).unwrap();
    let b = bootstrap_null(&s, 150, 3).unwrap();
    assert_eq!(a.draws(), b.draws());
    assert!(a.draws().windows(2).all(|w| w[0] <= w[1]));
    assert_ne!(a.draws(), bootstrap_null(&s, 150, 4).unwrap().draws());
    // a longer run extends the shorter one replicate by replicate
    let longer = bootstrap_null(&s, 300, 3).unwrap();
    for d in a.draws() {
        assert!(longer.draws().contains(d));
    }
}

#[test]
fn quantile_is_generalized_inverse() {
    let mut r = rng(206);
    let s = PairedSample::new(line(&gaussian(&mut r, 25)), line(&gaussian(&mut r, 25))).unwrap();
    let nd = spectral_null(&s, SpectralLaw::U, 501, 1).unwrap();
    for p in [0.01, 0.1, 0.5, 0.9, 0.95, 0.99] {
        let q = quantile(&nd, p).unwrap();
        let below_or_at = nd.draws().iter().filter(|&&d| d <= q).count() as f64 / nd.m() as f64;
        let strictly_below = nd.draws().iter().filter(|&&d| d < q).count() as f64 / nd.m() as f64;
        assert!(below_or_at >= p && strictly_below < p, "p = {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bootstrap_decision_is_scale_invariant(seed in any::<u64>(), c in prop::sample::select(vec![0.5, 2.0, 4.0, 0.125])) {
        // powers of two keep every product exact
        let mut r = rng(seed);
        let n = r.random_range(7..30);
        let s = random_metric_sample(&mut r, n);
        let t = PairedSample::new(s.a().scaled(c), s.b().clone()).unwrap();
        let cfg = TestConfig::new(Estimator::U, ThresholdMethod::Bootstrap, 0.1, 100, seed);
        let a = run_test(&s, &cfg).unwrap();
        let b = run_test(&t, &cfg).unwrap();
        prop_assert_eq!(a.reject, b.reject);
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert!((b.statistic_scaled - c * a.statistic_scaled).abs() <= 1e-12 * (1.0 + b.statistic_scaled.abs()));
    }

    #[test]
    fn report_invariants(seed in any::<u64>(), spectral in any::<bool>(), alpha in 0.01f64..0.5) {
        let mut r = rng(seed);
        let n = r.random_range(7..25);
        let s = random_metric_sample(&mut r, n);
        let thr = if spectral { ThresholdMethod::Spectral } else { ThresholdMethod::Bootstrap };
        let cfg = TestConfig::new(Estimator::U, thr, alpha, 80, seed);
        let rep = run_test(&s, &cfg).unwrap();
        prop_assert_eq!(rep.reject, rep.statistic_scaled > rep.threshold);
        prop_assert!(rep.p_value > 0.0 && rep.p_value <= 1.0);
        if rep.reject {
            prop_assert!(rep.p_value <= alpha + 1.0 / 81.0);
        }
        prop_assert_eq!(rep.clone(), run_test(&s, &cfg).unwrap());
    }
}
