#![allow(dead_code)]

use hdcca::cca::DataPanel;
use hdcca::rng::{gaussian_matrix, Rng};
use nalgebra::DMatrix;

pub fn panel(m: DMatrix<f64>) -> DataPanel<f64> {
    DataPanel::from_matrix(m).unwrap()
}

pub fn null_pair(rng: &mut Rng, k: usize, m: usize, s: usize) -> (DataPanel<f64>, DataPanel<f64>) {
    (panel(gaussian_matrix(rng, k, s)), panel(gaussian_matrix(rng, m, s)))
}

/// Sample standard error of a quantile estimate, with the density at the
/// quantile estimated by a central difference of the empirical quantile function.
pub fn quantile_se(x: &[f64], p: f64) -> f64 {
    let h = 0.02;
    let dq = hdcca::stats::quantile(x, p + h) - hdcca::stats::quantile(x, p - h);
    (p * (1.0 - p) / x.len() as f64).sqrt() * dq / (2.0 * h)
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
