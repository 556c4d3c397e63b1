//! Independence tests and Monte Carlo quantile tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cca::{squared_correlations, DataPanel, DEFAULT_TOL};
use crate::ensembles::{laguerre_limit_rng, manova_eigenvalues_rng};
use crate::error::{Error, Result};
use crate::rng::{replicates, Seed};
use crate::stats::quantile_sorted;
use crate::wachter::WachterParams;

pub const TABLE_VERSION: u32 = 1;

/// Quantile levels tabulated by default.
pub const DEFAULT_ALPHAS: [f64; 7] = [0.5, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995];

/// Dimension below which the large-dimensional test warns.
pub const LARGE_DIM_WARN_K: usize = 50;

/// MANOVA sizes used to sample the edge, plus the Wachter ratios used to
/// rescale it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryDesign {
    pub k: usize,
    pub l: usize,
    pub q: usize,
    pub tau_k: f64,
    pub tau_m: f64,
}

impl AiryDesign {
    /// MANOVA(K, L, Q) is the null law of CCA with `M = L`, `S = L + Q`.
    pub fn from_cca_dims(k: usize, m: usize, s: usize) -> Result<Self> {
        if k > m || k + m > s {
            return Err(Error::InvalidDimensions(format!("need K <= M and K + M <= S, got ({k}, {m}, {s})")));
        }
        let w = WachterParams::<f64>::from_dims(k, m, s)?;
        Ok(Self { k, l: m, q: s - m, tau_k: w.tau_k(), tau_m: w.tau_m() })
    }

    /// Sizes `K = sim_size`, `M ≈ K τ_K/τ_M`, `S ≈ K τ_K`.
    pub fn from_aspect(sim_size: usize, tau_k: f64, tau_m: f64) -> Result<Self> {
        WachterParams::new(tau_k, tau_m)?;
        let s = (sim_size as f64 * tau_k).round() as usize;
        let m = (sim_size as f64 * tau_k / tau_m).round() as usize;
        Self::from_cca_dims(sim_size, m, s)
    }

    /// Null law of the top detrended cointegration correlations at `(K, T)`:
    /// `J(K; K/2, (T-2K)/2)`, rescaled with the ratios `(1+τ, (1+τ)/2)`, `τ = T/K`.
    pub fn for_cointegration(k: usize, t: usize) -> Result<Self> {
        if k == 0 || t <= 2 * k {
            return Err(Error::InvalidDimensions(format!("need T > 2K, got K={k}, T={t}")));
        }
        let tau = t as f64 / k as f64;
        Ok(Self { k, l: 2 * k - 1, q: t - k - 1, tau_k: 1.0 + tau, tau_m: (1.0 + tau) / 2.0 })
    }

    pub fn wachter(&self) -> Result<WachterParams<f64>> {
        WachterParams::new(self.tau_k, self.tau_m)
    }
}

/// Which null statistic a table describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic_id", content = "params", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Statistic {
    /// Largest eigenvalue of a `K x K` Wishart matrix with `M` degrees of freedom.
    LaguerreMax { k: usize, m: usize },
    /// Sum of the top `r` rescaled edge eigenvalues.
    #[serde(rename = "AIRY1_SUM")]
    Airy1Sum { r: usize, design: AiryDesign },
    /// Sum of the top `r` eigenvalues of the Brownian functional `C V⁻¹ Cᵀ`.
    BrownianCoint { k: usize, r: usize, n_grid: usize },
}

impl Statistic {
    fn key(&self) -> String {
        match self {
            Statistic::LaguerreMax { k, m } => format!("laguerre_max_k{k}_m{m}"),
            Statistic::Airy1Sum { r, design: d } => format!(
                "airy1_sum_r{r}_k{}_l{}_q{}_{:016x}_{:016x}",
                d.k,
                d.l,
                d.q,
                d.tau_k.to_bits(),
                d.tau_m.to_bits()
            ),
            Statistic::BrownianCoint { k, r, n_grid } => format!("brownian_coint_k{k}_r{r}_n{n_grid}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub alpha: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TableMeta {
    /// Seconds since the Unix epoch; `None` keeps files reproducible.
    pub created_unix: Option<u64>,
    pub sizes: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub version: u32,
    #[serde(flatten)]
    pub statistic: Statistic,
    pub seed: Seed,
    pub nsamples: usize,
    pub entries: Vec<QuantileEntry>,
    pub meta: TableMeta,
}

impl QuantileTable {
    /// Empirical type-7 quantiles of `samples` at each level in `alphas`.
    pub fn from_samples(statistic: Statistic, mut samples: Vec<f64>, alphas: &[f64], seed: Seed, sizes: BTreeMap<String, usize>) -> Result<Self> {
        check_alphas(alphas)?;
        if samples.is_empty() {
            return Err(Error::ParameterRange("no samples to tabulate".into()));
        }
        samples.sort_by(f64::total_cmp);
        let mut levels = alphas.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let entries = levels.iter().map(|&a| QuantileEntry { alpha: a, q: quantile_sorted(&samples, a) }).collect();
        Ok(Self {
            version: TABLE_VERSION,
            statistic,
            seed,
            nsamples: samples.len(),
            entries,
            meta: TableMeta { created_unix: None, sizes },
        })
    }

    /// Quantile at level `alpha`, which must be tabulated.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| (e.alpha - alpha).abs() < 1e-12)
            .map(|e| e.q)
            .ok_or_else(|| {
                let have: Vec<f64> = self.entries.iter().map(|e| e.alpha).collect();
                Error::TableMismatch(format!("level {alpha} not tabulated (have {have:?})"))
            })
    }

    pub fn with_timestamp(mut self) -> Self {
        self.meta.created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.version != TABLE_VERSION {
            return Err(Error::TableMismatch(format!("unsupported table version {}", t.version)));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes through a temporary file and a rename, so readers never see a partial table.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::ParameterRange(format!("levels must lie in (0, 1), got {alphas:?}")));
    }
    Ok(())
}

/// Quantiles of the largest Wishart eigenvalue, the `S -> ∞` null limit of `S ĉ₁²`.
pub fn tabulate_laguerre_max(k: usize, m: usize, alphas: &[f64], nsamples: usize, seed: Seed) -> Result<QuantileTable> {
    if k == 0 || m < k {
        return Err(Error::InvalidDimensions(format!("need M >= K >= 1, got K={k}, M={m}")));
    }
    check_alphas(alphas)?;
    let samples = replicates(seed, nsamples, |_, rng| laguerre_limit_rng(rng, k, m)[0]);
    QuantileTable::from_samples(Statistic::LaguerreMax { k, m }, samples, alphas, seed, BTreeMap::new())
}

/// Samples of the partial sums `Σ_{i<=r} a_i`, `r = 1..=r_max`.
pub fn airy1_sum_samples(r_max: usize, design: &AiryDesign, nsamples: usize, seed: Seed) -> Result<Vec<Vec<f64>>> {
    if r_max == 0 || r_max > 10 || r_max > design.k {
        return Err(Error::ParameterRange(format!("r_max must lie in 1..=min(10, K), got {r_max}")));
    }
    if design.l < design.k || design.q < design.k {
        return Err(Error::InvalidDimensions(format!("invalid MANOVA design {design:?}")));
    }
    let w = design.wachter()?;
    let scale = (design.k as f64).powf(2.0 / 3.0) * w.c_plus().powf(2.0 / 3.0);
    let edge = w.lambda_plus();
    let d = *design;
    let rows = replicates(seed, nsamples, |_, rng| {
        let x = manova_eigenvalues_rng(rng, d.k, d.l, d.q);
        let mut acc = 0.0;
        (0..r_max)
            .map(|i| {
                acc += scale * (x[i] - edge);
                acc
            })
            .collect::<Vec<f64>>()
    });
    Ok((0..r_max).map(|r| rows.iter().map(|row| row[r]).collect()).collect())
}

/// One table per `r = 1..=r_max` of the rescaled edge sums at the given design.
pub fn tabulate_airy1_sums_design(r_max: usize, alphas: &[f64], design: &AiryDesign, nsamples: usize, seed: Seed) -> Result<Vec<QuantileTable>> {
    check_alphas(alphas)?;
    let samples = airy1_sum_samples(r_max, design, nsamples, seed)?;
    let sizes: BTreeMap<String, usize> = [("K", design.k), ("L", design.l), ("Q", design.q)]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b))
        .collect();
    samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| QuantileTable::from_samples(Statistic::Airy1Sum { r: i + 1, design: *design }, s, alphas, seed, sizes.clone()))
        .collect()
}

/// Default aspect ratios for the edge tabulation.
pub const AIRY_DEFAULT_ASPECT: (f64, f64) = (5.0, 10.0 / 3.0);

/// Edge sums at `K = sim_size` with the default aspect ratios `(5, 10/3)`.
pub fn tabulate_airy1_sums(r_max: usize, alphas: &[f64], sim_size: usize, nsamples: usize, seed: Seed) -> Result<Vec<QuantileTable>> {
    if sim_size < 100 {
        return Err(Error::ParameterRange(format!("sim_size must be >= 100, got {sim_size}")));
    }
    let design = AiryDesign::from_aspect(sim_size, AIRY_DEFAULT_ASPECT.0, AIRY_DEFAULT_ASPECT.1)?;
    tabulate_airy1_sums_design(r_max, alphas, &design, nsamples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallDim,
    LargeDim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic_value: f64,
    pub threshold: f64,
    /// Quantile level of the null table, e.g. 0.95 for a 5% test.
    pub alpha: f64,
    pub decision: Decision,
    pub regime: Regime,
    pub diagnostics: BTreeMap<String, Value>,
}

impl TestReport {
    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }
}

pub(crate) fn decide(reject: bool) -> Decision {
    if reject {
        Decision::Reject
    } else {
        Decision::FailToReject
    }
}

/// Orients a pair so the first panel has fewer rows.
fn oriented<'a>(u: &'a DataPanel<f64>, v: &'a DataPanel<f64>) -> (&'a DataPanel<f64>, &'a DataPanel<f64>) {
    if u.rows() <= v.rows() {
        (u, v)
    } else {
        (v, u)
    }
}

/// Rejects independence when `S ĉ₁²` exceeds the Laguerre quantile.
pub fn independence_test_small(u: &DataPanel<f64>, v: &DataPanel<f64>, alpha: f64, table: &QuantileTable) -> Result<TestReport> {
    let (a, b) = oriented(u, v);
    let (k, m, s) = (a.rows(), b.rows(), a.cols());
    match table.statistic {
        Statistic::LaguerreMax { k: tk, m: tm } if tk == k && tm == m => {}
        other => {
            return Err(Error::TableMismatch(format!("need LAGUERRE_MAX with K={k}, M={m}, got {other:?}")));
        }
    }
    let q = table.quantile(alpha)?;
    let c = squared_correlations(a, b, DEFAULT_TOL)?;
    let stat = s as f64 * c[0];
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("c1_sq".into(), Value::from(c[0]));
    diagnostics.insert("dims".into(), serde_json::json!({"K": k, "M": m, "S": s}));
    Ok(TestReport { statistic_value: stat, threshold: q, alpha, decision: decide(stat > q), regime: Regime::SmallDim, diagnostics })
}

/// Rejects independence when `K^{2/3} c+^{2/3} (ĉ₁² - λ+)` exceeds the edge quantile.
///
/// The ratios are estimated by `S/K`, `S/M`.
pub fn independence_test_large(u: &DataPanel<f64>, v: &DataPanel<f64>, alpha: f64, table: &QuantileTable) -> Result<TestReport> {
    let (a, b) = oriented(u, v);
    let (k, m, s) = (a.rows(), b.rows(), a.cols());
    match table.statistic {
        Statistic::Airy1Sum { r: 1, .. } => {}
        other => return Err(Error::TableMismatch(format!("need AIRY1_SUM with r=1, got {other:?}"))),
    }
    let w = WachterParams::<f64>::from_dims(k, m, s).map_err(|e| Error::InvalidRegime(e.to_string()))?;
    let q = table.quantile(alpha)?;
    let c = squared_correlations(a, b, DEFAULT_TOL)?;
    let stat = (k as f64).powf(2.0 / 3.0) * w.c_plus().powf(2.0 / 3.0) * (c[0] - w.lambda_plus());
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("c1_sq".into(), Value::from(c[0]));
    diagnostics.insert("lambda_plus".into(), Value::from(w.lambda_plus()));
    diagnostics.insert("tau_k".into(), Value::from(w.tau_k()));
    diagnostics.insert("tau_m".into(), Value::from(w.tau_m()));
    diagnostics.insert("dims".into(), serde_json::json!({"K": k, "M": m, "S": s}));
    if k < LARGE_DIM_WARN_K {
        diagnostics.insert("warning".into(), Value::from(format!("K = {k} is below {LARGE_DIM_WARN_K}; the edge approximation may be poor")));
    }
    Ok(TestReport { statistic_value: stat, threshold: q, alpha, decision: decide(stat > q), regime: Regime::LargeDim, diagnostics })
}

/// Directory for cached tables: explicit choice, then `HDCCA_TABLE_DIR`,
/// then `$XDG_CACHE_HOME/hdcca`, then `~/.cache/hdcca`.
pub fn resolve_cache_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("HDCCA_TABLE_DIR").filter(|s| !s.is_empty()) {
        return PathBuf::from(p);
    }
    if let Some(p) = std::env::var_os("XDG_CACHE_HOME").filter(|s| !s.is_empty()) {
        return PathBuf::from(p).join("hdcca");
    }
    if let Some(home) = std::env::var_os("HOME").filter(|s| !s.is_empty()) {
        return PathBuf::from(home).join(".cache").join("hdcca");
    }
    std::env::temp_dir().join("hdcca")
}

/// On-disk table cache keyed by statistic, parameters, sample count and seed.
#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, statistic: &Statistic, nsamples: usize, seed: Seed) -> PathBuf {
        self.dir.join(format!("{}_n{nsamples}_s{}_{}.json", statistic.key(), seed.value, seed.stream))
    }

    /// Returns the cached table if present, else builds, stores and returns it.
    ///
    /// A cached file that fails to parse or describes another statistic is rebuilt.
    pub fn get_or_build(
        &self,
        statistic: &Statistic,
        nsamples: usize,
        seed: Seed,
        build: impl FnOnce() -> Result<QuantileTable>,
    ) -> Result<QuantileTable> {
        let path = self.path_for(statistic, nsamples, seed);
        if let Ok(t) = QuantileTable::load(&path) {
            if t.statistic == *statistic && t.nsamples == nsamples && t.seed == seed {
                return Ok(t);
            }
        }
        let t = build()?;
        t.save(&path)?;
        Ok(t)
    }
}
