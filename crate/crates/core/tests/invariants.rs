use std::collections::BTreeMap;

use hdcca::cca::{sample_cca, sample_cca_projector_oracle, sequential_maximization_oracle, DataPanel, DEFAULT_TOL};
use hdcca::coint::{coint_lambda_pm, trace_statistic};
use hdcca::ensembles::{jacobi_eigenvalue_logdensity, JacobiParams};
use hdcca::hyptest::{QuantileTable, Statistic, DEFAULT_ALPHAS};
use hdcca::linalg::random_orthogonal;
use hdcca::rng::{gaussian_matrix, Rng, Seed};
use hdcca::spectrum::{Spectrum, SpectrumMeta};
use hdcca::spike::{detection_threshold, predicted_angles, rho2_from_z, z_from_rho2};
use hdcca::wachter::WachterParams;
use hdcca::{alignment_angle, DataPanel64};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use proptest::prelude::*;

fn panel(m: DMatrix<f64>) -> DataPanel64 {
    DataPanel::from_matrix(m).unwrap()
}

fn pair(seed: u64, k: usize, m: usize, s: usize) -> (Rng, DataPanel64, DataPanel64) {
    let mut rng = Seed::new(seed).rng();
    let u = panel(gaussian_matrix(&mut rng, k, s));
    let v = panel(gaussian_matrix(&mut rng, m, s));
    (rng, u, v)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Valid Wachter parameters with `τ_K >= τ_M`.
fn wachter_params() -> impl Strategy<Value = WachterParams<f64>> {
    (1.05f64..20.0, 0.0f64..1.0).prop_filter_map("outside the valid region", |(tm, frac)| {
        let lo = (tm / (tm - 1.0)).max(tm) + 1e-3;
        let tk = lo + frac * 30.0;
        WachterParams::new(tk, tm).ok()
    })
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=5, 1usize..=5, 0usize..12).prop_map(|(k, m, extra)| (k, m, k + m + 1 + extra))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_invariance(seed in any::<u64>(), (k, m, s) in dims()) {
        let (mut rng, u, v) = pair(seed, k, m, s);
        let f = gaussian_matrix(&mut rng, k, k) + DMatrix::identity(k, k) * 0.5;
        let g = gaussian_matrix(&mut rng, m, m) + DMatrix::identity(m, m) * 0.5;
        prop_assume!(f.clone().svd(false, false).singular_values.min() > 1e-3);
        prop_assume!(g.clone().svd(false, false).singular_values.min() > 1e-3);
        let a = sample_cca(&u, &v, DEFAULT_TOL).unwrap().correlations_sq;
        let b = sample_cca(&panel(&f * u.matrix()), &panel(&g * v.matrix()), DEFAULT_TOL).unwrap().correlations_sq;
        prop_assert!(max_diff(&a, &b) < 1e-8);
    }

    #[test]
    fn orthogonal_ambient_invariance(seed in any::<u64>(), (k, m, s) in dims()) {
        let (mut rng, u, v) = pair(seed, k, m, s);
        let o = random_orthogonal(&mut rng, s);
        let a = sample_cca(&u, &v, DEFAULT_TOL).unwrap().correlations_sq;
        let b = sample_cca(&panel(u.matrix() * o.transpose()), &panel(v.matrix() * o.transpose()), DEFAULT_TOL).unwrap().correlations_sq;
        prop_assert!(max_diff(&a, &b) < 1e-8);
    }

    #[test]
    fn symmetry(seed in any::<u64>(), (k, m, s) in dims()) {
        let (_, u, v) = pair(seed, k, m, s);
        let a = sample_cca(&u, &v, DEFAULT_TOL).unwrap().correlations_sq;
        let b = sample_cca(&v, &u, DEFAULT_TOL).unwrap().correlations_sq;
        prop_assert!(max_diff(&a, &b) < 1e-10);
    }

    #[test]
    fn three_routes_agree(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=3, extra in 0usize..=10) {
        let s = (k + m + extra).min(16);
        let (_, u, v) = pair(seed, k, m, s);
        let a = sample_cca(&u, &v, DEFAULT_TOL).unwrap().correlations_sq;
        let b = sample_cca_projector_oracle(&u, &v).unwrap().values;
        prop_assert!(max_diff(&a, &b) < 1e-8);
        let c = sequential_maximization_oracle(&u, &v, 16).unwrap().correlations_sq;
        prop_assert!(max_diff(&a, &c) < 1e-6, "{a:?} vs {c:?}");
    }

    #[test]
    fn orthogonality_table(seed in any::<u64>(), (k, m, s) in dims()) {
        let (_, u, v) = pair(seed, k, m, s);
        let sys = sample_cca(&u, &v, DEFAULT_TOL).unwrap();
        let c = &sys.correlations_sq;
        prop_assert!(c.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(c.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assume!(c.windows(2).all(|w| w[0] - w[1] > 1e-6));
        let us: Vec<DVector<f64>> = sys.alphas.iter().map(|a| u.combine(a).unwrap()).collect();
        let vs: Vec<DVector<f64>> = sys.betas.iter().map(|b| v.combine(b).unwrap()).collect();
        for i in 0..k {
            for j in 0..k {
                prop_assert!((us[i].dot(&us[j]) - f64::from(i == j)).abs() < 1e-8);
            }
        }
        for i in 0..m {
            for j in 0..m {
                prop_assert!((vs[i].dot(&vs[j]) - f64::from(i == j)).abs() < 1e-8);
            }
        }
        for i in 0..k {
            for j in 0..m {
                let want = if i == j && i < c.len() { c[i].sqrt() } else { 0.0 };
                prop_assert!((us[i].dot(&vs[j]) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn alignment_angle_is_scale_free(seed in any::<u64>(), scale in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0]) {
        let mut rng = Seed::new(seed).rng();
        let u = panel(gaussian_matrix(&mut rng, 3, 12));
        let a = gaussian_matrix(&mut rng, 3, 1).column(0).into_owned();
        let b = gaussian_matrix(&mut rng, 3, 1).column(0).into_owned();
        let t = alignment_angle(&u, &a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((alignment_angle(&u, &a, &(&b * scale)).unwrap() - t).abs() < 1e-12);
        prop_assert!(alignment_angle(&u, &a, &(&a * scale)).unwrap() < 1e-12);
    }

    #[test]
    fn wachter_density_integrates_to_one(w in wachter_params()) {
        let (lo, hi) = w.support();
        prop_assert!(0.0 <= lo && lo < hi && hi < 1.0);
        prop_assert!((w.integrate(|_| 1.0, 1e-12) - 1.0).abs() < 1e-8);
        prop_assert_eq!(w.pdf(hi + 1e-9), 0.0);
        prop_assert!(w.pdf(0.5 * (lo + hi)) > 0.0);
        let (sl, sh) = w.swapped().support();
        prop_assert!((sl - lo).abs() < 1e-14 && (sh - hi).abs() < 1e-14);
    }

    #[test]
    fn stieltjes_solves_quadratic(w in wachter_params(), re in -3.0f64..3.0, im in prop_oneof![-2.0f64..-0.01, 0.01f64..2.0]) {
        let z = Complex::new(re, im);
        let g = w.stieltjes(z).unwrap();
        prop_assert!(w.quadratic_residual(z, g).norm() < 1e-9 * (1.0 + g.norm_sqr()));
        // Im G has the opposite sign to Im z for a probability measure.
        prop_assert!(g.im * im < 0.0);
    }

    #[test]
    fn spike_round_trip(w in wachter_params(), frac in 0.001f64..1.0) {
        let crit = detection_threshold(&w);
        prop_assume!(crit < 0.999);
        let rho2 = crit + (1.0 - crit) * frac;
        let z = z_from_rho2(rho2, &w).unwrap();
        prop_assert!(z > w.lambda_plus());
        prop_assert!((rho2_from_z(z, &w).unwrap() - rho2).abs() < 1e-10);
        let (su, sv) = predicted_angles(rho2, &w).unwrap();
        prop_assert!((0.0..=1.0).contains(&su) && (0.0..=1.0).contains(&sv));
    }

    #[test]
    fn trace_statistic_nonincreasing_in_r(mut vals in proptest::collection::vec(0.0f64..0.99, 1..8), t in 2usize..5000) {
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let spec = Spectrum::new(vals.clone(), SpectrumMeta::Unknown).unwrap();
        let stats: Vec<f64> = (0..=vals.len()).map(|r| trace_statistic(&spec, r, t).unwrap()).collect();
        prop_assert!(stats.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(stats.iter().all(|&s| s <= 0.0));
    }

    #[test]
    fn coint_edges_are_wachter_edges(tau in 2.001f64..500.0) {
        let (lo, hi) = coint_lambda_pm(tau).unwrap();
        let (wl, wh) = WachterParams::new(1.0 + tau, (1.0 + tau) / 2.0).unwrap().support();
        prop_assert!((lo - wl).abs() < 1e-12 && (hi - wh).abs() < 1e-12);
    }

    #[test]
    fn quantile_table_round_trip(samples in proptest::collection::vec(-1e6f64..1e6, 2..200), seed in any::<u64>()) {
        let sizes: BTreeMap<String, usize> = [("K".to_string(), 3)].into_iter().collect();
        let t = QuantileTable::from_samples(Statistic::LaguerreMax { k: 3, m: 4 }, samples, &DEFAULT_ALPHAS, Seed::new(seed), sizes).unwrap();
        prop_assert!(t.entries.windows(2).all(|w| w[0].alpha < w[1].alpha && w[0].q <= w[1].q));
        let back = QuantileTable::from_json(&t.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        for (a, b) in back.entries.iter().zip(&t.entries) {
            prop_assert_eq!(a.q.to_bits(), b.q.to_bits());
        }
    }

    #[test]
    fn spectrum_is_sorted(vals in proptest::collection::vec(0.0f64..=1.0, 0..30)) {
        let s = Spectrum::new(vals.clone(), SpectrumMeta::Unknown).unwrap();
        prop_assert_eq!(s.len(), vals.len());
        prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_density_reflection(n in 1usize..5, p in 0.5f64..6.0, q in 0.5f64..6.0, seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let mut x: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.01..0.99)).collect();
        x.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assume!(x.windows(2).all(|w| w[0] - w[1] > 1e-6));
        let y: Vec<f64> = x.iter().rev().map(|v| 1.0 - v).collect();
        let a = jacobi_eigenvalue_logdensity(&x, &JacobiParams::new(n, p, q).unwrap()).unwrap();
        let b = jacobi_eigenvalue_logdensity(&y, &JacobiParams::new(n, q, p).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }
}

#[test]
fn seeds_reproduce_bit_for_bit() {
    let a = gaussian_matrix(&mut Seed::with_stream(9, 4).rng(), 3, 50);
    let b = gaussian_matrix(&mut Seed::with_stream(9, 4).rng(), 3, 50);
    let c = gaussian_matrix(&mut Seed::with_stream(9, 5).rng(), 3, 50);
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(a, c);
}
