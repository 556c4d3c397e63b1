mod common;

use common::{binomial_se, null_pair, panel};
use std::ops::AddAssign;
use hdcca::coint::{
    coint_lambda_pm, coint_test_large, coint_test_small, jacobi_coupling_check, johansen_lambdas, make_pi_rank_r, modified_lambdas,
    simulate_brownian_null, simulate_var1_rng, tabulate_brownian_coint, TimeSeriesPanel, VarModel,
};
use hdcca::hyptest::{
    airy1_sum_samples, independence_test_large, independence_test_small, tabulate_airy1_sums_design, tabulate_laguerre_max, AiryDesign,
    DEFAULT_ALPHAS,
};
use hdcca::rng::{gaussian_matrix, replicates, std_normal, Seed};
use hdcca::spike::spiked_panels_rng;
use hdcca::stats;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

fn rate(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
}

fn se_between(a: &[f64], b: &[f64], p: f64) -> f64 {
    (common::quantile_se(a, p).powi(2) + common::quantile_se(b, p).powi(2)).sqrt()
}

#[test]
fn laguerre_scalar_table_is_chi_squared() {
    let n = 20_000;
    let t = tabulate_laguerre_max(1, 4, &DEFAULT_ALPHAS, n, Seed::new(1)).unwrap();
    let chi = ChiSquared::new(4.0).unwrap();
    for &a in &DEFAULT_ALPHAS {
        let want = chi.inverse_cdf(a);
        let se = (a * (1.0 - a) / n as f64).sqrt() / chi.pdf(want);
        let got = t.quantile(a).unwrap();
        assert!((got - want).abs() < 4.0 * se, "alpha {a}: {got} vs {want}");
    }
}

#[test]
fn laguerre_quantiles_stable_when_samples_double() {
    let draw = |n, s| replicates(Seed::new(s), n, |_, rng| hdcca::ensembles::laguerre_limit_rng(rng, 2, 3)[0]);
    let a: Vec<f64> = draw(10_000, 2);
    let b: Vec<f64> = draw(20_000, 3);
    for p in [0.5, 0.9, 0.95] {
        let d = stats::quantile(&a, p) - stats::quantile(&b, p);
        assert!(d.abs() < 3.0 * se_between(&a, &b, p), "p {p}: diff {d}");
    }
}

#[test]
fn small_independence_test_size_and_power() {
    let (k, m, s) = (2, 3, 500);
    let table = tabulate_laguerre_max(k, m, &DEFAULT_ALPHAS, 20_000, Seed::new(4)).unwrap();
    let mut nrng = Seed::new(40).rng();
    let u = gaussian_matrix(&mut nrng, k, s);
    let mut v = gaussian_matrix(&mut nrng, m, s) * 1e-3;
    v.rows_mut(0, k).add_assign(&u);
    assert!(independence_test_small(&panel(u), &panel(v), 0.95, &table).unwrap().rejected());
    let null: Vec<bool> = replicates(Seed::new(5), 2000, |_, rng| {
        let (u, v) = null_pair(rng, k, m, s);
        independence_test_small(&u, &v, 0.95, &table).unwrap().rejected()
    });
    assert!((rate(&null) - 0.05).abs() < 0.02, "size {}", rate(&null));
    let alt: Vec<bool> = replicates(Seed::new(6), 200, |_, rng| {
        let (u, v) = spiked_panels_rng(rng, k, m, 1000, &[0.3]).unwrap();
        independence_test_small(&u, &v, 0.95, &table).unwrap().rejected()
    });
    assert!(rate(&alt) > 0.9, "power {}", rate(&alt));
}

#[test]
fn edge_tables_order_in_r() {
    let d = AiryDesign::from_cca_dims(100, 150, 500).unwrap();
    let s = airy1_sum_samples(3, &d, 2000, Seed::new(7)).unwrap();
    let m1 = stats::mean(&s[0]);
    assert!(m1 < 0.0 && (m1 + 1.2065).abs() < 0.2, "mean {m1}");
    let tabs = tabulate_airy1_sums_design(3, &DEFAULT_ALPHAS, &d, 2000, Seed::new(7)).unwrap();
    for &a in &DEFAULT_ALPHAS {
        let q: Vec<f64> = tabs.iter().map(|t| t.quantile(a).unwrap()).collect();
        assert!(q[0] > q[1] && q[1] > q[2], "alpha {a}: {q:?}");
    }
}

#[test]
fn large_independence_test_power_and_subcritical_rate() {
    // S/K = 8 and S/M = 16/3, where the detection threshold is about 0.18.
    let (k, m, s) = (100, 150, 800);
    let d = AiryDesign::from_cca_dims(k, m, s).unwrap();
    let table = tabulate_airy1_sums_design(1, &DEFAULT_ALPHAS, &d, 2000, Seed::new(8)).unwrap().remove(0);
    let strong: Vec<bool> = replicates(Seed::new(9), 40, |_, rng| {
        let (u, v) = spiked_panels_rng(rng, k, m, s, &[0.7]).unwrap();
        independence_test_large(&u, &v, 0.95, &table).unwrap().rejected()
    });
    assert!(rate(&strong) > 0.95, "power {}", rate(&strong));
    let n = 300;
    let weak: Vec<bool> = replicates(Seed::new(10), n, |_, rng| {
        let (u, v) = spiked_panels_rng(rng, k, m, s, &[0.1f64.sqrt()]).unwrap();
        independence_test_large(&u, &v, 0.95, &table).unwrap().rejected()
    });
    assert!((rate(&weak) - 0.05).abs() < 4.0 * binomial_se(0.05, n) + 0.02, "rate {}", rate(&weak));
}

#[test]
fn random_walk_variance_grows_linearly() {
    let t = 200;
    let model = VarModel::random_walk(1);
    let end: Vec<f64> = replicates(Seed::new(11), 4000, |_, rng| simulate_var1_rng(&model, t, None, rng).unwrap().matrix()[(0, t)]);
    // Variance of a sample variance of normals is 2σ⁴/(n-1).
    let se = t as f64 * (2.0f64 / 3999.0).sqrt();
    assert!((stats::variance(&end) - t as f64).abs() < 4.0 * se);
}

fn autocorr(x: &[f64], lag: usize) -> f64 {
    let m = stats::mean(x);
    let num: f64 = x.iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum();
    let den: f64 = x.iter().map(|a| (a - m).powi(2)).sum();
    num / den
}

#[test]
fn stationary_models_have_the_expected_autocorrelation() {
    let t = 20_000;
    let mut rng = Seed::new(12).rng();
    let white = VarModel::new(-DMatrix::identity(1, 1), DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
    let x = simulate_var1_rng(&white, t, None, &mut rng).unwrap();
    let row: Vec<f64> = x.matrix().row(0).iter().copied().collect();
    assert!(autocorr(&row, 1).abs() < 4.0 / (t as f64).sqrt());

    let theta = 0.6;
    let ar = VarModel::new(DMatrix::from_element(1, 1, theta - 1.0), DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
    let x = simulate_var1_rng(&ar, t, None, &mut rng).unwrap();
    let row: Vec<f64> = x.matrix().row(0).iter().copied().collect();
    for s in 1..=3 {
        assert!((autocorr(&row, s) - theta.powi(s as i32)).abs() < 0.03, "lag {s}");
    }
}

#[test]
fn exact_linear_relation_gives_unit_correlation() {
    let t = 300;
    let mut rng = Seed::new(13).rng();
    let mut x = DMatrix::zeros(2, t + 1);
    for s in 1..=t {
        x[(0, s)] = x[(0, s - 1)] + std_normal(&mut rng);
        x[(1, s)] = x[(0, s - 1)];
    }
    let spec = johansen_lambdas(&TimeSeriesPanel::new(x).unwrap()).unwrap();
    assert!((spec.values[0] - 1.0).abs() < 1e-8, "{:?}", spec.values);
}

#[test]
fn brownian_null_is_stable_in_the_grid() {
    let n = 4000;
    let coarse: Vec<f64> = simulate_brownian_null(2, 500, n, Seed::new(14)).unwrap().into_iter().map(|v| v[0]).collect();
    let fine: Vec<f64> = simulate_brownian_null(2, 1000, n, Seed::new(15)).unwrap().into_iter().map(|v| v[0]).collect();
    for p in [0.5, 0.9, 0.95] {
        let d = stats::quantile(&coarse, p) - stats::quantile(&fine, p);
        assert!(d.abs() < 3.0 * se_between(&coarse, &fine, p), "p {p}: diff {d}");
    }
}

#[test]
fn small_coint_test_size_and_power() {
    let (k, t) = (2, 500);
    let table = tabulate_brownian_coint(k, 1, &DEFAULT_ALPHAS, 1000, 20_000, Seed::new(16)).unwrap().remove(0);
    let rw = VarModel::random_walk(k);
    let null: Vec<bool> = replicates(Seed::new(17), 2000, |_, rng| {
        let x = simulate_var1_rng(&rw, t, None, rng).unwrap();
        coint_test_small(&x, 1, 0.95, &table).unwrap().rejected()
    });
    assert!((rate(&null) - 0.05).abs() < 0.02, "size {}", rate(&null));
    let pi = make_pi_rank_r(k, 1, -0.5, Seed::new(18)).unwrap();
    let alt_model = VarModel::new(pi, DMatrix::identity(k, k), DVector::zeros(k)).unwrap();
    let alt: Vec<bool> = replicates(Seed::new(19), 300, |_, rng| {
        let x = simulate_var1_rng(&alt_model, t, None, rng).unwrap();
        coint_test_small(&x, 1, 0.95, &table).unwrap().rejected()
    });
    assert!(rate(&alt) > 0.9, "power {}", rate(&alt));
}

#[test]
fn large_coint_test_rejects_a_stationary_system() {
    let (k, t) = (100, 1000);
    let d = AiryDesign::for_cointegration(k, t).unwrap();
    let table = tabulate_airy1_sums_design(1, &DEFAULT_ALPHAS, &d, 1000, Seed::new(20)).unwrap().remove(0);
    let model = VarModel::new(-DMatrix::identity(k, k), DMatrix::identity(k, k), DVector::zeros(k)).unwrap();
    let x = simulate_var1_rng(&model, t, None, &mut Seed::new(21).rng()).unwrap();
    let rep = coint_test_large(&x, 1, 0.95, &table).unwrap();
    assert!(rep.rejected(), "stat {} threshold {}", rep.statistic_value, rep.threshold);
}

#[test]
fn large_coint_test_detects_a_corner_spike() {
    let (k, t) = (100, 1000);
    let d = AiryDesign::for_cointegration(k, t).unwrap();
    let table = tabulate_airy1_sums_design(1, &DEFAULT_ALPHAS, &d, 1000, Seed::new(30)).unwrap().remove(0);
    let mut pi = DMatrix::zeros(k, k);
    pi[(0, 0)] = -1.0;
    let model = VarModel::new(pi, DMatrix::identity(k, k), DVector::zeros(k)).unwrap();
    let (_, hi) = coint_lambda_pm(t as f64 / k as f64).unwrap();
    let runs: Vec<(bool, f64)> = replicates(Seed::new(31), 20, |_, rng| {
        let x = simulate_var1_rng(&model, t, None, rng).unwrap();
        let top = modified_lambdas(&x).unwrap().values[0];
        (coint_test_large(&x, 1, 0.95, &table).unwrap().rejected(), top)
    });
    let rej: Vec<bool> = runs.iter().map(|r| r.0).collect();
    let tops: Vec<f64> = runs.iter().map(|r| r.1).collect();
    assert!(stats::median(&tops) > hi);
    assert!(rate(&rej) >= 0.9, "rejection rate {}", rate(&rej));
}

#[test]
fn coupling_means_agree() {
    let (k, t) = (100, 1000);
    let rep = jacobi_coupling_check(k, t, 300, Seed::new(22)).unwrap();
    assert!((rep.mean_lambda1 - rep.mean_x1).abs() < 0.01, "{rep:?}");
    let (_, hi) = coint_lambda_pm(t as f64 / k as f64).unwrap();
    let floor = hi * (1.0 - 5.0 * (k as f64).powf(-2.0 / 3.0));
    assert!(rep.mean_lambda1 > floor && rep.mean_x1 > floor, "{rep:?}");
}

#[test]
fn modified_spectrum_ignores_the_innovation_covariance() {
    let (k, t) = (5, 100);
    let mut arng = Seed::new(23).rng();
    let a = gaussian_matrix(&mut arng, k, k);
    let lambda = &a * a.transpose() + DMatrix::identity(k, k) * 0.1;
    let plain = VarModel::random_walk(k);
    let mixed = VarModel::new(DMatrix::zeros(k, k), lambda, DVector::zeros(k)).unwrap();
    let top = |m: &VarModel, seed| -> Vec<f64> {
        replicates(Seed::new(seed), 2000, |_, rng| modified_lambdas(&simulate_var1_rng(m, t, None, rng).unwrap()).unwrap().values[0])
    };
    let (x, y) = (top(&plain, 24), top(&mixed, 25));
    let d = stats::ks_two_sample(&x, &y);
    assert!(stats::ks_two_sample_pvalue(d, 2000, 2000) > 0.01, "KS {d}");
}
