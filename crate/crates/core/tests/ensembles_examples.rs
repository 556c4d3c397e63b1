mod common;

use common::{null_pair, panel};
use hdcca::cca::{population_cca, sample_cca, squared_correlations, CovarianceTriple, DEFAULT_TOL};
use hdcca::ensembles::{
    ds_residuals, jacobi_eigenvalue_logdensity, manova_eigenvalues_rng, sample_gaussian_panel, sample_manova, sample_wishart, wishart_rng,
    JacobiParams, TestFunction,
};
use hdcca::linalg::sym_eigenvalues_desc;
use hdcca::rng::{gaussian_matrix, replicates, Seed};
use hdcca::stats;
use hdcca::wachter::WachterParams;
use nalgebra::DMatrix;
use statrs::distribution::{Beta, ContinuousCDF};

#[test]
fn gaussian_panel_moments() {
    let p = sample_gaussian_panel(1000, 1000, Seed::new(1)).unwrap();
    let x: Vec<f64> = p.matrix().iter().copied().collect();
    assert!(stats::mean(&x).abs() < 4.0 / 1000.0);
    assert!((stats::variance(&x) - 1.0).abs() < 0.01);
    assert_eq!(p, sample_gaussian_panel(1000, 1000, Seed::new(1)).unwrap());
}

#[test]
fn wishart_scalar_and_trace() {
    let x: Vec<f64> = replicates(Seed::new(2), 100_000, |_, rng| wishart_rng(rng, 1, 1)[(0, 0)]);
    // Squared standard normal: mean 1, variance 2.
    assert!((stats::mean(&x) - 1.0).abs() < 3.0 * (2.0f64 / 1e5).sqrt());
    let (k, l) = (4, 7);
    let tr: Vec<f64> = replicates(Seed::new(3), 5000, |_, rng| wishart_rng(rng, k, l).trace());
    let se = (2.0 * (k * l) as f64 / 5000.0).sqrt();
    assert!((stats::mean(&tr) - (k * l) as f64).abs() < 4.0 * se);
    let w = sample_wishart(k, l, Seed::new(4)).unwrap();
    assert_eq!(w, w.transpose());
    assert!(sym_eigenvalues_desc(&w).iter().all(|&e| e >= -1e-10));
    assert!(sample_wishart(5, 4, Seed::new(4)).is_err());
}

#[test]
fn manova_scalar_is_beta() {
    let (l, q) = (4, 9);
    let x: Vec<f64> = replicates(Seed::new(5), 10_000, |i, _| {
        let m = sample_manova(1, l, q, Seed::with_stream(5, i as u64 + 1)).unwrap();
        m[(0, 0)]
    });
    assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
    let beta = Beta::new(l as f64 / 2.0, q as f64 / 2.0).unwrap();
    assert!(stats::ks_one_sample(&x, |t| beta.cdf(t)) < 0.02);
}

#[test]
fn scalar_null_correlation_is_beta() {
    let (m, s) = (5, 50);
    let x: Vec<f64> = replicates(Seed::new(17), 10_000, |_, rng| {
        let (u, v) = null_pair(rng, 1, m, s);
        squared_correlations(&u, &v, DEFAULT_TOL).unwrap()[0]
    });
    let beta = Beta::new(m as f64 / 2.0, (s - m) as f64 / 2.0).unwrap();
    assert!(stats::ks_one_sample(&x, |t| beta.cdf(t)) < 0.02);
}

#[test]
fn manova_eigenvalues_in_unit_interval() {
    for i in 0..20 {
        let m = sample_manova(6, 8, 7, Seed::new(100 + i)).unwrap();
        let e = sym_eigenvalues_desc(&m);
        assert!(e.iter().all(|&v| v > 0.0 && v < 1.0), "{e:?}");
    }
}

#[test]
fn manova_mean_matches_wachter_mean() {
    let (k, l, q) = (100, 150, 350);
    let means: Vec<f64> = replicates(Seed::new(6), 20, |_, rng| stats::mean(&manova_eigenvalues_rng(rng, k, l, q)));
    let w = WachterParams::from_dims(k, l, l + q).unwrap();
    let target = w.integrate(|x| x, 1e-12);
    assert!((stats::mean(&means) - target).abs() < 2e-3, "{} vs {target}", stats::mean(&means));
}

#[test]
fn laguerre_scalar_mean_and_edge_law() {
    let x: Vec<f64> = replicates(Seed::new(7), 20_000, |_, rng| sym_eigenvalues_desc(&wishart_rng(rng, 1, 6))[0]);
    assert!((stats::mean(&x) - 6.0).abs() < 4.0 * (12.0f64 / 20_000.0).sqrt());

    // S ĉ₁² at (K, M, S) = (2, 3, 500) against the largest Laguerre coordinate.
    let (k, m, s) = (2, 3, 500);
    let a: Vec<f64> = replicates(Seed::new(8), 5000, |_, rng| {
        let (u, v) = null_pair(rng, k, m, s);
        s as f64 * squared_correlations(&u, &v, DEFAULT_TOL).unwrap()[0]
    });
    let b: Vec<f64> = replicates(Seed::new(9), 5000, |_, rng| sym_eigenvalues_desc(&wishart_rng(rng, k, m))[0]);
    let pos = b.iter().all(|&v| v > 0.0);
    assert!(pos);
    assert!(stats::ks_two_sample(&a, &b) < 0.03);
}

#[test]
fn jacobi_logdensity_spot_values() {
    let one = JacobiParams::new(1, 1.0, 1.0).unwrap();
    assert!(jacobi_eigenvalue_logdensity(&[0.37], &one).unwrap().abs() < 1e-12);
    let p = JacobiParams::new(1, 2.0, 3.0).unwrap();
    let want = (12.0f64 * 0.3 * 0.49).ln();
    assert!((jacobi_eigenvalue_logdensity(&[0.3], &p).unwrap() - want).abs() < 1e-12);
}

#[test]
fn dyson_schwinger_rhs_scales_with_inverse_size() {
    let f = [TestFunction::Monomial(1)];
    let small = ds_residuals(&JacobiParams::new(10, 5.0, 5.0).unwrap(), &f, 20_000, Seed::new(10)).unwrap();
    let large = ds_residuals(&JacobiParams::new(20, 5.0, 5.0).unwrap(), &f, 20_000, Seed::new(11)).unwrap();
    for r in small.iter().chain(&large) {
        assert!(r.estimate.abs() < 4.0 * r.stderr);
    }
    let ratio = large[0].rhs_mean / small[0].rhs_mean;
    assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    let c = ds_residuals(&JacobiParams::new(6, 2.0, 3.0).unwrap(), &[TestFunction::Constant], 20_000, Seed::new(12)).unwrap();
    assert!(c[0].estimate.abs() < 4.0 * c[0].stderr);
}

#[test]
fn row_transforms_leave_the_law_unchanged() {
    let (k, m, s) = (2, 3, 30);
    let mut frng = Seed::new(13).rng();
    let f = gaussian_matrix(&mut frng, k, k);
    let g = gaussian_matrix(&mut frng, m, m);
    let plain: Vec<f64> = replicates(Seed::new(14), 3000, |_, rng| {
        let (u, v) = null_pair(rng, k, m, s);
        squared_correlations(&u, &v, DEFAULT_TOL).unwrap()[0]
    });
    let mixed: Vec<f64> = replicates(Seed::new(15), 3000, |_, rng| {
        let (u, v) = null_pair(rng, k, m, s);
        squared_correlations(&panel(&f * u.matrix()), &panel(&g * v.matrix()), DEFAULT_TOL).unwrap()[0]
    });
    let d = stats::ks_two_sample(&plain, &mixed);
    assert!(stats::ks_two_sample_pvalue(d, 3000, 3000) > 0.01, "KS {d}");
}

#[test]
fn population_matches_large_sample() {
    let (k, m) = (2, 3);
    let mut rng = Seed::new(16).rng();
    let a = gaussian_matrix(&mut rng, k + m, k + m);
    let sigma = &a * a.transpose() + DMatrix::identity(k + m, k + m);
    let cov = CovarianceTriple::new(
        sigma.view((0, 0), (k, k)).into_owned(),
        sigma.view((k, k), (m, m)).into_owned(),
        sigma.view((0, k), (k, m)).into_owned(),
    )
    .unwrap();
    let pop = population_cca(&cov).unwrap().correlations_sq;
    let l = sigma.cholesky().unwrap().l();
    let z = &l * gaussian_matrix(&mut rng, k + m, 1_000_000);
    let u = panel(z.rows(0, k).into_owned());
    let v = panel(z.rows(k, m).into_owned());
    let smp = sample_cca(&u, &v, DEFAULT_TOL).unwrap().correlations_sq;
    for (p, s) in pop.iter().zip(&smp) {
        assert!((p - s).abs() < 0.01, "{pop:?} vs {smp:?}");
    }
}
