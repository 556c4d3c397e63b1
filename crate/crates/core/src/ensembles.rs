//! Gaussian, Wishart and MANOVA (real Jacobi) ensembles.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::cca::DataPanel;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues_desc, sym_inv_sqrt_floored};
use crate::rng::{gaussian_matrix, replicates, Rng, Seed};
use crate::stats;

/// Eigenvalue floor used when inverting `ZZᵀ + YYᵀ`.
pub const MANOVA_FLOOR: f64 = 1e-12;

pub fn sample_gaussian_panel(k: usize, s: usize, seed: Seed) -> Result<DataPanel<f64>> {
    if k == 0 || s == 0 {
        return Err(Error::InvalidDimensions(format!("panel must be at least 1x1, got {k}x{s}")));
    }
    DataPanel::from_matrix(gaussian_matrix(&mut seed.rng(), k, s))
}

/// `ZZᵀ` for a `K x L` standard normal `Z`.
pub fn sample_wishart(k: usize, l: usize, seed: Seed) -> Result<DMatrix<f64>> {
    check_wishart(k, l)?;
    Ok(wishart_rng(&mut seed.rng(), k, l))
}

fn check_wishart(k: usize, l: usize) -> Result<()> {
    if k == 0 || l < k {
        return Err(Error::InvalidDimensions(format!("Wishart needs L >= K >= 1, got K={k}, L={l}")));
    }
    Ok(())
}

pub fn wishart_rng(rng: &mut Rng, k: usize, l: usize) -> DMatrix<f64> {
    let z = gaussian_matrix(rng, k, l);
    &z * z.transpose()
}

fn check_manova(k: usize, l: usize, q: usize) -> Result<()> {
    if k == 0 || l < k || q < k {
        return Err(Error::InvalidDimensions(format!(
            "MANOVA needs K <= L and K <= Q with K >= 1, got K={k}, L={l}, Q={q}"
        )));
    }
    Ok(())
}

/// `(A + B)^{-1/2} A (A + B)^{-1/2}` with `A = ZZᵀ`, `B = YYᵀ` independent
/// Wishart matrices of `K x L` and `K x Q` panels.
pub fn sample_manova(k: usize, l: usize, q: usize, seed: Seed) -> Result<DMatrix<f64>> {
    check_manova(k, l, q)?;
    let mut rng = seed.rng();
    let a = wishart_rng(&mut rng, k, l);
    let b = wishart_rng(&mut rng, k, q);
    let w = sym_inv_sqrt_floored(&(&a + &b), MANOVA_FLOOR);
    let m = &w * a * &w;
    Ok((&m + m.transpose()) * 0.5)
}

/// Eigenvalues of the MANOVA matrix, descending.
///
/// Draws the same panels as [`sample_manova`] but solves the equivalent
/// problem `L⁻¹ A L⁻ᵀ` with `A + B = L Lᵀ`, avoiding the inverse square root.
pub fn manova_eigenvalues(k: usize, l: usize, q: usize, seed: Seed) -> Result<Vec<f64>> {
    check_manova(k, l, q)?;
    Ok(manova_eigenvalues_rng(&mut seed.rng(), k, l, q))
}

pub fn manova_eigenvalues_rng(rng: &mut Rng, k: usize, l: usize, q: usize) -> Vec<f64> {
    let z = gaussian_matrix(rng, k, l);
    let y = gaussian_matrix(rng, k, q);
    let a = &z * z.transpose();
    let sum = &a + &y * y.transpose();
    match sum.clone().cholesky() {
        Some(ch) => {
            let mut x = z;
            ch.l().solve_lower_triangular_mut(&mut x);
            let m = &x * x.transpose();
            sym_eigenvalues_desc(&m).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
        }
        None => {
            let w = sym_inv_sqrt_floored(&sum, MANOVA_FLOOR);
            sym_eigenvalues_desc(&(&w * a * &w)).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
        }
    }
}

/// Parameters of the real Jacobi ensemble `J(N; p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
}

impl JacobiParams {
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self> {
        if n == 0 || !(p > 0.0) || !(q > 0.0) || !p.is_finite() || !q.is_finite() {
            return Err(Error::ParameterRange(format!("need N >= 1, p > 0, q > 0; got N={n}, p={p}, q={q}")));
        }
        Ok(Self { n, p, q })
    }

    /// Parameters of the eigenvalue law of `MANOVA(K, L, Q)`.
    pub fn from_manova(k: usize, l: usize, q: usize) -> Result<Self> {
        check_manova(k, l, q)?;
        Self::new(k, (l - k + 1) as f64 / 2.0, (q - k + 1) as f64 / 2.0)
    }

    /// Panel widths `(L, Q)` realizing these parameters, when they are integers.
    pub fn manova_dims(&self) -> Option<(usize, usize)> {
        let l = 2.0 * self.p + self.n as f64 - 1.0;
        let q = 2.0 * self.q + self.n as f64 - 1.0;
        let is_int = |x: f64| (x - x.round()).abs() < 1e-9 && x.round() >= self.n as f64;
        (is_int(l) && is_int(q)).then(|| (l.round() as usize, q.round() as usize))
    }
}

/// Log-density of the ordered eigenvalues `1 > x_1 > ... > x_N > 0`,
/// including the Selberg normalization.
pub fn jacobi_eigenvalue_logdensity(x: &[f64], params: &JacobiParams) -> Result<f64> {
    let n = params.n;
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!("{} coordinates for N = {n}", x.len())));
    }
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) || (i > 0 && !(x[i - 1] > v)) {
            return Err(Error::OutOfSimplex);
        }
    }
    let (p, q) = (params.p, params.q);
    let mut lp = ln_gamma(n as f64 + 1.0);
    for k in 0..n {
        let kf = k as f64;
        lp += ln_gamma(p + q + (n as f64 + kf - 1.0) / 2.0) + ln_gamma(1.5)
            - ln_gamma(p + kf / 2.0)
            - ln_gamma(q + kf / 2.0)
            - ln_gamma(1.0 + (kf + 1.0) / 2.0);
    }
    for i in 0..n {
        for j in i + 1..n {
            lp += (x[i] - x[j]).ln();
        }
        lp += (p - 1.0) * x[i].ln() + (q - 1.0) * (1.0 - x[i]).ln();
    }
    Ok(lp)
}

/// Eigenvalues of `sample_wishart(K, M)`: the `S -> ∞` limit of `S` times
/// the squared sample canonical correlations.
pub fn sample_laguerre_limit(k: usize, m: usize, seed: Seed) -> Result<Vec<f64>> {
    check_wishart(k, m)?;
    Ok(laguerre_limit_rng(&mut seed.rng(), k, m))
}

pub fn laguerre_limit_rng(rng: &mut Rng, k: usize, m: usize) -> Vec<f64> {
    sym_eigenvalues_desc(&wishart_rng(rng, k, m))
}

/// Test functions for the Dyson-Schwinger check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// `x^d` for `d` in `1..=4`.
    Monomial(u32),
    /// `1 / (z - x)` for real `z > 1`.
    Resolvent(f64),
}

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::Constant => Ok(()),
            TestFunction::Monomial(d) if (1..=4).contains(&d) => Ok(()),
            TestFunction::Monomial(d) => Err(Error::ParameterRange(format!("monomial degree {d} not in 1..=4"))),
            TestFunction::Resolvent(z) if z > 1.0 && z.is_finite() => Ok(()),
            TestFunction::Resolvent(z) => Err(Error::ParameterRange(format!("resolvent point {z} must exceed 1"))),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Monomial(d) => x.powi(d as i32),
            TestFunction::Resolvent(z) => 1.0 / (z - x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant => 0.0,
            TestFunction::Monomial(d) => d as f64 * x.powi(d as i32 - 1),
            TestFunction::Resolvent(z) => 1.0 / ((z - x) * (z - x)),
        }
    }

    /// Every member of the family used by the validation suite.
    pub fn family() -> Vec<TestFunction> {
        vec![
            TestFunction::Constant,
            TestFunction::Monomial(1),
            TestFunction::Monomial(2),
            TestFunction::Monomial(3),
            TestFunction::Monomial(4),
            TestFunction::Resolvent(1.5),
            TestFunction::Resolvent(3.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsResidual {
    /// Monte Carlo mean of left side minus right side.
    pub estimate: f64,
    pub stderr: f64,
    /// Monte Carlo mean of the right side, `-(1/2K) (1/K) Σ f'(x_k)`.
    pub rhs_mean: f64,
}

/// Left side minus right side of the loop equation for one spectrum.
fn ds_terms(x: &[f64], p: f64, q: f64, f: &TestFunction) -> (f64, f64) {
    let k = x.len() as f64;
    let mut lhs = 0.0;
    let mut dsum = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let fi = f.value(xi);
        let di = f.derivative(xi);
        dsum += di;
        lhs += fi * ((p - 1.0) / (k * xi) + (q - 1.0) / (k * (xi - 1.0))) / k;
        // Diagonal of the difference quotient is f'.
        let mut dq = di;
        for (j, &xj) in x.iter().enumerate() {
            if j != i {
                dq += (fi - f.value(xj)) / (xi - xj);
            }
        }
        lhs += dq / (2.0 * k * k);
    }
    let rhs = -dsum / (2.0 * k * k);
    (lhs - rhs, rhs)
}

/// Monte Carlo check of the Dyson-Schwinger (loop) equation of `J(N; p, q)`
/// for several test functions on one set of sampled spectra.
///
/// Spectra come from MANOVA matrices, so `2p + N - 1` and `2q + N - 1` must
/// be integers. Needs `p, q > 1`, otherwise boundary terms break the identity.
pub fn ds_residuals(params: &JacobiParams, fs: &[TestFunction], nsamples: usize, seed: Seed) -> Result<Vec<DsResidual>> {
    if !(params.p > 1.0 && params.q > 1.0) {
        return Err(Error::ParameterRange(format!("need p > 1 and q > 1, got p={}, q={}", params.p, params.q)));
    }
    for f in fs {
        f.validate()?;
    }
    if nsamples < 2 {
        return Err(Error::ParameterRange("need at least two samples".into()));
    }
    let (l, q) = params
        .manova_dims()
        .ok_or_else(|| Error::ParameterRange("2p + N - 1 and 2q + N - 1 must be integers".into()))?;
    let n = params.n;
    let terms: Vec<Vec<(f64, f64)>> = replicates(seed, nsamples, |_, rng| {
        let x = manova_eigenvalues_rng(rng, n, l, q);
        fs.iter().map(|f| ds_terms(&x, params.p, params.q, f)).collect()
    });
    Ok((0..fs.len())
        .map(|j| {
            let r: Vec<f64> = terms.iter().map(|t| t[j].0).collect();
            let rhs: Vec<f64> = terms.iter().map(|t| t[j].1).collect();
            DsResidual {
                estimate: stats::mean(&r),
                stderr: (stats::variance(&r) / nsamples as f64).sqrt(),
                rhs_mean: stats::mean(&rhs),
            }
        })
        .collect())
}

pub fn ds_residual(params: &JacobiParams, f: TestFunction, nsamples: usize, seed: Seed) -> Result<DsResidual> {
    Ok(ds_residuals(params, &[f], nsamples, seed)?[0])
}
