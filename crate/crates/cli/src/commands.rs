use std::path::{Path, PathBuf};

use hdcca::coint::{self, TimeSeriesPanel, VarModel};
use hdcca::hyptest::{self, AiryDesign, QuantileTable, Statistic, TableCache, DEFAULT_ALPHAS, LARGE_DIM_WARN_K};
use hdcca::rng::{gaussian_matrix, Seed};
use hdcca::spectrum::SpectrumMeta;
use hdcca::spike::spiked_panels_rng;
use hdcca::wachter::WachterParams;
use hdcca::{DataPanel, Decision, Error, Spectrum, TestReport};
use serde_json::{json, Value};

use crate::args::{Cli, Command, RegimeArg, Simulate, Tabulate, TestArgs};
use crate::error::CliError;
use crate::io;

/// Settings shared by every subcommand, validated once.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub seed: Seed,
    pub alpha: f64,
    pub r: usize,
    pub table_cache_dir: PathBuf,
    pub histogram_bins: usize,
    pub timestamp: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let (command, input_path, alpha, r, bins) = match &cli.command {
            Command::Cca { u, .. } => ("cca", Some(u.clone()), 0.95, 0, 50),
            Command::Histogram { spectrum, bins, .. } => ("histogram", Some(spectrum.clone()), 0.95, 0, *bins),
            Command::Independence { u, test, .. } => ("independence", Some(u.clone()), test.alpha, 0, 50),
            Command::Coint { input, r, test, .. } => ("coint", Some(input.clone()), test.alpha, *r, 50),
            Command::Simulate { .. } => ("simulate", None, 0.95, 0, 50),
            Command::Tabulate { .. } => ("tabulate", None, 0.95, 0, 50),
        };
        let cfg = Self {
            command,
            input_path,
            output_path: cli.output.clone(),
            seed: Seed::new(cli.seed),
            alpha,
            r,
            table_cache_dir: hyptest::resolve_cache_dir(cli.table_dir.as_deref()),
            histogram_bins: bins,
            timestamp: !cli.no_timestamp,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.histogram_bins < 5 {
            return Err(CliError::Usage(format!("need at least 5 histogram bins, got {}", self.histogram_bins)));
        }
        Ok(())
    }

    fn output(&self) -> Option<&Path> {
        self.output_path.as_deref()
    }

    fn provenance(&self, extra: Value) -> Value {
        let mut p = json!({
            "tool": "hdcca",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed.value,
        });
        if let Some(path) = &self.input_path {
            p["input"] = json!(path.display().to_string());
        }
        if let Value::Object(m) = extra {
            p.as_object_mut().expect("object").extend(m);
        }
        if self.timestamp {
            p["created_unix"] = json!(unix_now());
        }
        p
    }

    fn cache(&self) -> TableCache {
        TableCache::new(&self.table_cache_dir)
    }

    fn finish_table(&self, t: QuantileTable) -> QuantileTable {
        if self.timestamp {
            t.with_timestamp()
        } else {
            t
        }
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn schema(name: &str) -> String {
    format!("hdcca.{name}/1")
}

fn vecs(v: &[nalgebra::DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.iter().copied().collect()).collect()
}

/// Runs the parsed command; `Some(decision)` for test commands.
pub fn run(cli: Cli) -> Result<Option<Decision>, CliError> {
    let cfg = RunConfig::from_cli(&cli)?;
    match cli.command {
        Command::Cca { u, v } => cmd_cca(&cfg, &u, &v).map(|_| None),
        Command::Histogram { spectrum, tau_k, tau_m, tau, .. } => cmd_histogram(&cfg, &spectrum, tau_k.zip(tau_m), tau).map(|_| None),
        Command::Independence { u, v, test } => cmd_independence(&cfg, &u, &v, &test).map(Some),
        Command::Coint { input, n_grid, test, .. } => cmd_coint(&cfg, &input, n_grid, &test).map(Some),
        Command::Simulate { what } => cmd_simulate(&cfg, what).map(|_| None),
        Command::Tabulate { what, nsamples, alphas } => cmd_tabulate(&cfg, what, nsamples, &alphas).map(|_| None),
    }
}

pub fn cmd_cca(cfg: &RunConfig, u: &Path, v: &Path) -> Result<(), CliError> {
    let (up, vp) = (io::read_panel(u)?, io::read_panel(v)?);
    let sys = hdcca::sample_cca(&up, &vp, hdcca::cca::DEFAULT_TOL)?;
    let out = json!({
        "schema": schema("cca"),
        "dims": {"K": up.rows(), "M": vp.rows(), "S": up.cols()},
        "correlations_sq": sys.correlations_sq,
        "alphas": vecs(&sys.alphas),
        "betas": vecs(&sys.betas),
        "degenerate": sys.degenerate,
        "provenance": cfg.provenance(json!({"input_v": v.display().to_string()})),
    });
    io::write_json(cfg.output(), &out)
}

fn overlay_params(spec: &Spectrum, explicit: Option<(f64, f64)>, tau: Option<f64>) -> Result<WachterParams<f64>, CliError> {
    if let Some((tk, tm)) = explicit {
        return Ok(WachterParams::new(tk, tm)?);
    }
    if let Some(t) = tau {
        return Ok(coint::coint_wachter(t)?);
    }
    match spec.meta {
        SpectrumMeta::Cca { k, m, s } => Ok(WachterParams::from_dims(k, m, s)?),
        SpectrumMeta::Coint { k, t } => Ok(coint::coint_wachter(t as f64 / k as f64)?),
        SpectrumMeta::Manova { k, l, q } => Ok(WachterParams::from_dims(k, l, l + q)?),
        SpectrumMeta::Unknown => {
            Err(Error::InvalidParams("the spectrum carries no dimensions; pass --tau-k and --tau-m, or --tau".into()).into())
        }
    }
}

pub fn cmd_histogram(cfg: &RunConfig, path: &Path, explicit: Option<(f64, f64)>, tau: Option<f64>) -> Result<(), CliError> {
    let raw: Spectrum = io::read_json(path)?;
    let spec = Spectrum::new(raw.values, raw.meta)?;
    if spec.is_empty() {
        return Err(Error::EmptySpectrum.into());
    }
    let params = overlay_params(&spec, explicit, tau)?;
    let n = cfg.histogram_bins;
    let width = 1.0 / n as f64;
    let mut counts = vec![0usize; n];
    for &x in &spec.values {
        counts[((x * n as f64) as usize).min(n - 1)] += 1;
    }
    let total = spec.len() as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = (i as f64 + 0.5) * width;
            vec![c, counts[i] as f64 / (total * width), params.pdf(c)]
        })
        .collect();
    io::write_rows(cfg.output(), &["bin_center", "empirical_density", "wachter_density"], &rows)
}

fn table_for(cfg: &RunConfig, explicit: Option<&Path>, stat: Statistic, nsamples: usize, build: impl FnOnce() -> hdcca::Result<QuantileTable>) -> Result<(QuantileTable, String), CliError> {
    if let Some(p) = explicit {
        return Ok((QuantileTable::load(p)?, p.display().to_string()));
    }
    let cache = cfg.cache();
    let path = cache.path_for(&stat, nsamples, cfg.seed);
    let t = cache.get_or_build(&stat, nsamples, cfg.seed, || build().map(|t| cfg.finish_table(t)))?;
    Ok((t, path.display().to_string()))
}

fn test_output(cfg: &RunConfig, name: &str, report: &TestReport, table: &QuantileTable, table_path: String, extra: Value) -> Result<Decision, CliError> {
    let out = json!({
        "schema": schema(name),
        "report": report,
        "table": {"statistic": table.statistic, "nsamples": table.nsamples, "seed": table.seed, "path": table_path},
        "provenance": cfg.provenance(extra),
    });
    io::write_json(cfg.output(), &out)?;
    Ok(report.decision)
}

pub fn cmd_independence(cfg: &RunConfig, u: &Path, v: &Path, test: &TestArgs) -> Result<Decision, CliError> {
    let (up, vp) = (io::read_panel(u)?, io::read_panel(v)?);
    if up.cols() != vp.cols() {
        return Err(Error::DimensionMismatch(format!("U has {} observations, V has {}", up.cols(), vp.cols())).into());
    }
    let (k, m) = (up.rows().min(vp.rows()), up.rows().max(vp.rows()));
    let s = up.cols();
    let large = match test.regime {
        RegimeArg::Auto => k >= LARGE_DIM_WARN_K,
        RegimeArg::Small => false,
        RegimeArg::Large => true,
    };
    let n = test.nsamples;
    let (report, table, path) = if large {
        let design = AiryDesign::from_cca_dims(k, m, s).map_err(|e| Error::InvalidRegime(e.to_string()))?;
        let stat = Statistic::Airy1Sum { r: 1, design };
        let (t, p) = table_for(cfg, test.table.as_deref(), stat, n, || {
            Ok(hyptest::tabulate_airy1_sums_design(1, &DEFAULT_ALPHAS, &design, n, cfg.seed)?.remove(0))
        })?;
        (hyptest::independence_test_large(&up, &vp, cfg.alpha, &t)?, t, p)
    } else {
        let stat = Statistic::LaguerreMax { k, m };
        let (t, p) = table_for(cfg, test.table.as_deref(), stat, n, || hyptest::tabulate_laguerre_max(k, m, &DEFAULT_ALPHAS, n, cfg.seed))?;
        (hyptest::independence_test_small(&up, &vp, cfg.alpha, &t)?, t, p)
    };
    test_output(cfg, "independence", &report, &table, path, json!({"input_v": v.display().to_string()}))
}

pub fn cmd_coint(cfg: &RunConfig, input: &Path, n_grid: usize, test: &TestArgs) -> Result<Decision, CliError> {
    let x: TimeSeriesPanel = io::read_time_series(input)?;
    let (k, r) = (x.k(), cfg.r);
    let large = match test.regime {
        RegimeArg::Auto => k > coint::SMALL_DIM_WARN_K,
        RegimeArg::Small => false,
        RegimeArg::Large => true,
    };
    let n = test.nsamples;
    let (report, table, path) = if large {
        let design = AiryDesign::for_cointegration(k, x.t()).map_err(|e| Error::InvalidRegime(e.to_string()))?;
        if r == 0 || r > k.min(10) {
            return Err(Error::ParameterRange(format!("the large-K test needs 1 <= r <= {}, got {r}", k.min(10))).into());
        }
        let stat = Statistic::Airy1Sum { r, design };
        let (t, p) = table_for(cfg, test.table.as_deref(), stat, n, || {
            Ok(hyptest::tabulate_airy1_sums_design(r, &DEFAULT_ALPHAS, &design, n, cfg.seed)?.remove(r - 1))
        })?;
        (coint::coint_test_large(&x, r, cfg.alpha, &t)?, t, p)
    } else {
        if r > k {
            return Err(Error::ParameterRange(format!("r = {r} exceeds K = {k}")).into());
        }
        // r = 0 never rejects; a table is still attached for the record.
        let rt = r.max(1);
        let stat = Statistic::BrownianCoint { k, r: rt, n_grid };
        let (t, p) = table_for(cfg, test.table.as_deref(), stat, n, || {
            Ok(coint::tabulate_brownian_coint(k, rt, &DEFAULT_ALPHAS, n_grid, n, cfg.seed)?.remove(rt - 1))
        })?;
        (coint::coint_test_small(&x, r, cfg.alpha, &t)?, t, p)
    };
    test_output(cfg, "coint", &report, &table, path, json!({}))
}

fn cmd_simulate(cfg: &RunConfig, what: Simulate) -> Result<(), CliError> {
    let seed = cfg.seed;
    match what {
        Simulate::Panels { k, m, s, rho, out_u, out_v } => {
            let (u, v) = spiked_panels_rng(&mut seed.rng(), k, m, s, &rho)?;
            io::write_panel(Some(&out_u), "u", u.matrix())?;
            io::write_panel(Some(&out_v), "v", v.matrix())?;
            let out = json!({
                "schema": schema("simulate"),
                "files": {"u": out_u.display().to_string(), "v": out_v.display().to_string()},
                "provenance": cfg.provenance(json!({"kind": "panels", "dims": {"K": k, "M": m, "S": s}, "rho": rho})),
            });
            io::write_json(cfg.output(), &out)
        }
        Simulate::CcaSpectrum { k, m, s } => {
            let mut rng = seed.rng();
            let u = DataPanel::from_matrix(gaussian_matrix(&mut rng, k, s))?;
            let v = DataPanel::from_matrix(gaussian_matrix(&mut rng, m, s))?;
            io::write_json(cfg.output(), &hdcca::sample_spectrum(&u, &v)?)
        }
        Simulate::Var1 { k, t, rank, scale } => {
            let pi = coint::make_pi_rank_r(k, rank, scale, Seed::with_stream(seed.value, 1))?;
            let model = VarModel::new(pi, nalgebra::DMatrix::identity(k, k), nalgebra::DVector::zeros(k))?;
            let x = coint::simulate_var1(&model, t, seed)?;
            io::write_time_series(cfg.output(), &x)
        }
        Simulate::CointSpectrum { k, t } => {
            let x = coint::simulate_var1(&VarModel::random_walk(k), t, seed)?;
            io::write_json(cfg.output(), &coint::modified_lambdas(&x)?)
        }
    }
}

fn cmd_tabulate(cfg: &RunConfig, what: Tabulate, nsamples: usize, alphas: &[f64]) -> Result<(), CliError> {
    let alphas: Vec<f64> = if alphas.is_empty() { DEFAULT_ALPHAS.to_vec() } else { alphas.to_vec() };
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(CliError::Usage(format!("alpha levels must lie in (0, 1), got {a}")));
    }
    let seed = cfg.seed;
    let tables = match what {
        Tabulate::LaguerreMax { k, m } => vec![hyptest::tabulate_laguerre_max(k, m, &alphas, nsamples, seed)?],
        Tabulate::Airy1 { r_max, sim_size } => hyptest::tabulate_airy1_sums(r_max, &alphas, sim_size, nsamples, seed)?,
        Tabulate::Airy1Cca { k, m, s, r_max } => {
            let design = AiryDesign::from_cca_dims(k.min(m), k.max(m), s)?;
            hyptest::tabulate_airy1_sums_design(r_max, &alphas, &design, nsamples, seed)?
        }
        Tabulate::Airy1Coint { k, t, r_max } => {
            let design = AiryDesign::for_cointegration(k, t)?;
            hyptest::tabulate_airy1_sums_design(r_max, &alphas, &design, nsamples, seed)?
        }
        Tabulate::Brownian { k, r_max, n_grid } => coint::tabulate_brownian_coint(k, r_max, &alphas, n_grid, nsamples, seed)?,
    };
    let cache = cfg.cache();
    std::fs::create_dir_all(cache.dir()).map_err(|e| CliError::io(cache.dir(), e))?;
    let mut written = Vec::new();
    for t in tables {
        let t = cfg.finish_table(t);
        let path = cache.path_for(&t.statistic, t.nsamples, t.seed);
        t.save(&path)?;
        written.push(json!({"statistic": t.statistic, "path": path.display().to_string()}));
    }
    let out = json!({
        "schema": schema("tabulate"),
        "tables": written,
        "provenance": cfg.provenance(json!({"nsamples": nsamples})),
    });
    io::write_json(cfg.output(), &out)
}
