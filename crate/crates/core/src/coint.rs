//! Cointegration of a VAR(1) in error-correction form,
//! `ΔX_t = Π X_{t-1} + ε_t`, through canonical correlations between
//! increments and lagged levels.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cca::{squared_correlations_raw, DEFAULT_TOL};
use crate::ensembles::manova_eigenvalues_rng;
use crate::error::{Error, Result};
use crate::hyptest::{decide, QuantileTable, Regime, Statistic, TestReport};
use crate::linalg::{random_orthogonal, sym_eigenvalues_desc};
use crate::rng::{gaussian_matrix, replicates, Rng, Seed};
use crate::spectrum::{Spectrum, SpectrumMeta};
use crate::stats;
use crate::wachter::WachterParams;

/// Default number of grid steps for Brownian functionals.
pub const DEFAULT_N_GRID: usize = 1000;

/// Dimension above which the small-K test warns.
pub const SMALL_DIM_WARN_K: usize = 10;

/// `K` variables observed at times `0..=T`, one column per time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    x: DMatrix<f64>,
}

impl TimeSeriesPanel {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() < 3 {
            return Err(Error::InvalidDimensions(format!(
                "need K >= 1 and T >= 2, got a {}x{} panel",
                x.nrows(),
                x.ncols()
            )));
        }
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                if !x[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { x })
    }

    pub fn k(&self) -> usize {
        self.x.nrows()
    }

    /// Horizon `T`; the panel has `T + 1` columns.
    pub fn t(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `(ΔX_1..ΔX_T, X_0..X_{T-1})`, both `K x T`.
    pub fn increments_and_lags(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = self.t();
        let lag = self.x.columns(0, t).into_owned();
        let diff = self.x.columns(1, t) - &lag;
        (diff, lag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub pi: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub x0: DVector<f64>,
    chol: DMatrix<f64>,
}

impl VarModel {
    pub fn new(pi: DMatrix<f64>, lambda: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        let k = x0.len();
        if pi.shape() != (k, k) || lambda.shape() != (k, k) || k == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Pi {:?}, Lambda {:?}, X0 of length {k}",
                pi.shape(),
                lambda.shape()
            )));
        }
        if (&lambda - lambda.transpose()).amax() > 1e-10 * lambda.amax() {
            return Err(Error::SingularCovariance("Lambda is not symmetric".into()));
        }
        let chol = lambda
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("Lambda is not positive definite".into()))?
            .l();
        Ok(Self { pi, lambda, x0, chol })
    }

    /// `Π = 0`, `Λ = I`, `X_0 = 0`: a standard Gaussian random walk.
    pub fn random_walk(k: usize) -> Self {
        Self::new(DMatrix::zeros(k, k), DMatrix::identity(k, k), DVector::zeros(k)).expect("identity is positive definite")
    }

    pub fn k(&self) -> usize {
        self.x0.len()
    }
}

pub fn simulate_var1(model: &VarModel, t: usize, seed: Seed) -> Result<TimeSeriesPanel> {
    simulate_var1_rng(model, t, None, &mut seed.rng())
}

/// Simulates with an optional constant vector added to every innovation.
///
/// Innovations are drawn as one `K x T` standard normal matrix in row-major
/// order and then multiplied by the Cholesky factor of `Λ`.
pub fn simulate_var1_rng(model: &VarModel, t: usize, drift: Option<&DVector<f64>>, rng: &mut Rng) -> Result<TimeSeriesPanel> {
    if t < 2 {
        return Err(Error::InvalidDimensions(format!("need T >= 2, got {t}")));
    }
    let k = model.k();
    let eps = &model.chol * gaussian_matrix(rng, k, t);
    let mut x = DMatrix::zeros(k, t + 1);
    x.set_column(0, &model.x0);
    let pi_zero = model.pi.iter().all(|&v| v == 0.0);
    for s in 1..=t {
        let prev = x.column(s - 1).into_owned();
        let mut next = &prev + eps.column(s - 1);
        if !pi_zero {
            next += &model.pi * &prev;
        }
        if let Some(mu) = drift {
            next += mu;
        }
        x.set_column(s, &next);
    }
    TimeSeriesPanel::new(x)
}

/// `Π = scale · A Aᵀ` with `A` a random `K x r` matrix of orthonormal columns.
///
/// The rank is `r`, and for `scale` in `(-2, 0)` the `r` combinations
/// `Aᵀ X_t` are stationary while the rest of the system has unit roots.
pub fn make_pi_rank_r(k: usize, r: usize, scale: f64, seed: Seed) -> Result<DMatrix<f64>> {
    if r > k || k == 0 {
        return Err(Error::InvalidDimensions(format!("need 0 <= r <= K, got r={r}, K={k}")));
    }
    if r == 0 {
        return Ok(DMatrix::zeros(k, k));
    }
    let q = random_orthogonal(&mut seed.rng(), k);
    let a = q.columns(0, r);
    Ok(a * a.transpose() * scale)
}

/// Squared canonical correlations between increments and lagged levels.
pub fn johansen_lambdas(x: &TimeSeriesPanel) -> Result<Spectrum> {
    let (k, t) = (x.k(), x.t());
    if 2 * k > t {
        return Err(Error::TooFewObservations { needed: 2 * k, available: t });
    }
    let (d, lag) = x.increments_and_lags();
    let vals = squared_correlations_raw(&d, &lag, DEFAULT_TOL)?;
    Spectrum::new(vals, SpectrumMeta::Coint { k, t })
}

/// `(T/2) Σ_{i<=r} ln(1 - λ_i)`.
pub fn trace_statistic(spec: &Spectrum, r: usize, t: usize) -> Result<f64> {
    if r > spec.len() {
        return Err(Error::ParameterRange(format!("r = {r} exceeds the spectrum length {}", spec.len())));
    }
    let mut sum = 0.0;
    for &l in &spec.values[..r] {
        if l >= 1.0 - 1e-12 {
            return Err(Error::UnitCorrelation { value: l });
        }
        sum += (1.0 - l).ln();
    }
    Ok(t as f64 / 2.0 * sum)
}

/// Eigenvalues of `C V⁻¹ Cᵀ` for one discretized `K`-dimensional Brownian motion,
/// with `C[i][j] = ∫ B_j dB_i` by left-point sums and `V = ∫ B Bᵀ dt` by Riemann sums.
pub fn brownian_functional_rng(rng: &mut Rng, k: usize, n_grid: usize) -> Vec<f64> {
    let h = 1.0 / n_grid as f64;
    let db = gaussian_matrix(rng, k, n_grid) * h.sqrt();
    let mut b = DMatrix::zeros(k, n_grid);
    for l in 1..n_grid {
        let next = b.column(l - 1) + db.column(l - 1);
        b.set_column(l, &next);
    }
    let c = &db * b.transpose();
    let v = &b * b.transpose() * h;
    match v.clone().cholesky() {
        Some(ch) => {
            let mut y = c.transpose();
            ch.l().solve_lower_triangular_mut(&mut y);
            let m = y.tr_mul(&y);
            sym_eigenvalues_desc(&m).into_iter().map(|x| x.max(0.0)).collect()
        }
        None => vec![0.0; k],
    }
}

/// Samples of `(ν_1, ..., ν_K)`, each descending.
pub fn simulate_brownian_null(k: usize, n_grid: usize, nsamples: usize, seed: Seed) -> Result<Vec<Vec<f64>>> {
    if n_grid < 100 {
        return Err(Error::ParameterRange(format!("n_grid must be >= 100, got {n_grid}")));
    }
    if k == 0 {
        return Err(Error::InvalidDimensions("K must be positive".into()));
    }
    Ok(replicates(seed, nsamples, |_, rng| brownian_functional_rng(rng, k, n_grid)))
}

/// One table per `r = 1..=r_max` of the partial sums `Σ_{i<=r} ν_i`.
pub fn tabulate_brownian_coint(k: usize, r_max: usize, alphas: &[f64], n_grid: usize, nsamples: usize, seed: Seed) -> Result<Vec<QuantileTable>> {
    if r_max == 0 || r_max > k {
        return Err(Error::ParameterRange(format!("r_max must lie in 1..=K, got {r_max}")));
    }
    let samples = simulate_brownian_null(k, n_grid, nsamples, seed)?;
    let sizes: BTreeMap<String, usize> = [("K".to_string(), k), ("n_grid".to_string(), n_grid)].into_iter().collect();
    (1..=r_max)
        .map(|r| {
            let s: Vec<f64> = samples.iter().map(|nu| nu[..r].iter().sum()).collect();
            QuantileTable::from_samples(Statistic::BrownianCoint { k, r, n_grid }, s, alphas, seed, sizes.clone())
        })
        .collect()
}

/// Rejects `Π = 0` in favour of rank at least `r` when the trace statistic is
/// below `-q/2`, where `q` is the Brownian quantile of `Σ_{i<=r} ν_i`.
///
/// `r = 0` gives statistic 0 and threshold 0, so it never rejects.
pub fn coint_test_small(x: &TimeSeriesPanel, r: usize, alpha: f64, table: &QuantileTable) -> Result<TestReport> {
    let (k, t) = (x.k(), x.t());
    let spec = johansen_lambdas(x)?;
    let stat = trace_statistic(&spec, r, t)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("dims".into(), serde_json::json!({"K": k, "T": t}));
    diagnostics.insert("r".into(), Value::from(r));
    diagnostics.insert("lambdas".into(), Value::from(spec.values[..r.max(1).min(spec.len())].to_vec()));
    if k > SMALL_DIM_WARN_K {
        diagnostics.insert("warning".into(), Value::from(format!("K = {k} exceeds {SMALL_DIM_WARN_K}; the fixed-K limit may be poor")));
    }
    let threshold = if r == 0 {
        0.0
    } else {
        match table.statistic {
            Statistic::BrownianCoint { k: tk, r: tr, .. } if tk == k && tr == r => {}
            other => return Err(Error::TableMismatch(format!("need BROWNIAN_COINT with K={k}, r={r}, got {other:?}"))),
        }
        -0.5 * table.quantile(alpha)?
    };
    Ok(TestReport { statistic_value: stat, threshold, alpha, decision: decide(stat < threshold), regime: Regime::SmallDim, diagnostics })
}

/// Squared canonical correlations after detrending and demeaning.
///
/// Uses `X̃_t = X_{t-1} - ((t-1)/T)(X_T - X_0)` for `t = 1..T`, then removes
/// the time average of each row from `ΔX` and `X̃`.
pub fn modified_lambdas(x: &TimeSeriesPanel) -> Result<Spectrum> {
    let (k, t) = (x.k(), x.t());
    if t <= 2 * k {
        return Err(Error::TooFewObservations { needed: 2 * k + 1, available: t });
    }
    let (mut d, mut lag) = x.increments_and_lags();
    let span = x.matrix().column(t) - x.matrix().column(0);
    for s in 0..t {
        let w = s as f64 / t as f64;
        lag.column_mut(s).axpy(-w, &span, 1.0);
    }
    for m in [&mut d, &mut lag] {
        for i in 0..k {
            let mean = m.row(i).mean();
            m.row_mut(i).add_scalar_mut(-mean);
        }
    }
    let vals = squared_correlations_raw(&d, &lag, DEFAULT_TOL)?;
    Spectrum::new(vals, SpectrumMeta::Coint { k, t })
}

/// Edges `(λ-, λ+)` of the null law of the modified correlations at `τ = T/K`.
pub fn coint_lambda_pm(tau: f64) -> Result<(f64, f64)> {
    if !(tau > 2.0) || !tau.is_finite() {
        return Err(Error::ParameterRange(format!("tau = {tau} must exceed 2")));
    }
    let (a, b) = ((2.0 * tau).sqrt(), (tau - 1.0).sqrt());
    let d = (tau + 1.0) * (tau + 1.0);
    Ok(((a - b) * (a - b) / d, (a + b) * (a + b) / d))
}

/// Centering `c1 = ln(1 - λ+)` and scale `c2 < 0` of the large-K statistic.
pub fn coint_constants(tau: f64) -> Result<(f64, f64)> {
    let (lo, hi) = coint_lambda_pm(tau)?;
    let c1 = (1.0 - hi).ln();
    let c2 = -(2f64.powf(2.0 / 3.0))
        * hi.powf(2.0 / 3.0)
        * (1.0 - hi).powf(-1.0 / 3.0)
        * (hi - lo).powf(-1.0 / 3.0)
        * (tau + 1.0).powf(-2.0 / 3.0);
    Ok((c1, c2))
}

/// Large-K test of `Π = 0` against rank at least `r`, right-tailed.
pub fn coint_test_large(x: &TimeSeriesPanel, r: usize, alpha: f64, airy_table: &QuantileTable) -> Result<TestReport> {
    let (k, t) = (x.k(), x.t());
    if t <= 2 * k {
        return Err(Error::InvalidRegime(format!("need T > 2K, got K={k}, T={t}")));
    }
    if r == 0 || r > k {
        return Err(Error::ParameterRange(format!("r must lie in 1..=K, got {r}")));
    }
    match airy_table.statistic {
        Statistic::Airy1Sum { r: tr, .. } if tr == r => {}
        other => return Err(Error::TableMismatch(format!("need AIRY1_SUM with r={r}, got {other:?}"))),
    }
    let q = airy_table.quantile(alpha)?;
    let tau = t as f64 / k as f64;
    let (c1, c2) = coint_constants(tau).map_err(|e| Error::InvalidRegime(e.to_string()))?;
    let spec = modified_lambdas(x)?;
    let mut sum = 0.0;
    for &l in &spec.values[..r] {
        if l >= 1.0 - 1e-12 {
            return Err(Error::UnitCorrelation { value: l });
        }
        sum += (1.0 - l).ln();
    }
    let stat = (sum - r as f64 * c1) / ((k as f64).powf(-2.0 / 3.0) * c2);
    let (lo, hi) = coint_lambda_pm(tau)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("dims".into(), serde_json::json!({"K": k, "T": t}));
    diagnostics.insert("tau".into(), Value::from(tau));
    diagnostics.insert("lambda_minus".into(), Value::from(lo));
    diagnostics.insert("lambda_plus".into(), Value::from(hi));
    diagnostics.insert("c1".into(), Value::from(c1));
    diagnostics.insert("c2".into(), Value::from(c2));
    diagnostics.insert("lambdas".into(), Value::from(spec.values[..r].to_vec()));
    if tau < 2.5 {
        diagnostics.insert("warning".into(), Value::from(format!("T/K = {tau} is close to 2")));
    }
    Ok(TestReport { statistic_value: stat, threshold: q, alpha, decision: decide(stat > q), regime: Regime::LargeDim, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub ks: f64,
    pub mean_lambda1: f64,
    pub mean_x1: f64,
    pub lambda_plus: f64,
    pub nsamples: usize,
}

/// Compares the null law of the top modified correlation with the top
/// eigenvalue of `J(K; K/2, (T-2K)/2)`.
pub fn jacobi_coupling_check(k: usize, t: usize, nsamples: usize, seed: Seed) -> Result<CouplingReport> {
    if k == 0 || t <= 2 * k {
        return Err(Error::InvalidDimensions(format!("need T > 2K, got K={k}, T={t}")));
    }
    let model = VarModel::random_walk(k);
    let ts = Seed::with_stream(seed.value, seed.stream ^ 0x7473);
    let js = Seed::with_stream(seed.value, seed.stream ^ 0x6a63);
    let lam: Vec<f64> = replicates(ts, nsamples, |_, rng| {
        let x = simulate_var1_rng(&model, t, None, rng).expect("valid horizon");
        modified_lambdas(&x).map(|s| s.values[0]).unwrap_or(f64::NAN)
    });
    let x1: Vec<f64> = replicates(js, nsamples, |_, rng| manova_eigenvalues_rng(rng, k, 2 * k - 1, t - k - 1)[0]);
    Ok(CouplingReport {
        ks: stats::ks_two_sample(&lam, &x1),
        mean_lambda1: stats::mean(&lam),
        mean_x1: stats::mean(&x1),
        lambda_plus: coint_lambda_pm(t as f64 / k as f64)?.1,
        nsamples,
    })
}

/// Wachter parameters of the null modified spectrum: `(1 + τ, (1 + τ)/2)`.
pub fn coint_wachter(tau: f64) -> Result<WachterParams<f64>> {
    WachterParams::new(1.0 + tau, (1.0 + tau) / 2.0)
}
