use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hdcca", version, about = "Canonical correlation analysis, independence and cointegration tests")]
pub struct Cli {
    /// Omit creation timestamps so output is byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Directory for cached quantile tables (else HDCCA_TABLE_DIR, else the user cache).
    #[arg(long, global = true, value_name = "DIR")]
    pub table_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    Small,
    Large,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Quantile level of the null table; 0.95 gives a 5% test.
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    pub regime: RegimeArg,
    /// Use this quantile table instead of the cache.
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Monte Carlo samples when a table has to be built.
    #[arg(long, default_value_t = 10_000)]
    pub nsamples: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample canonical correlations and vectors of two panels.
    Cca {
        #[arg(long, value_name = "CSV")]
        u: PathBuf,
        #[arg(long, value_name = "CSV")]
        v: PathBuf,
    },
    /// Area-normalized histogram of a spectrum with the Wachter density at bin centers.
    Histogram {
        #[arg(long, value_name = "JSON")]
        spectrum: PathBuf,
        #[arg(long, requires = "tau_m", conflicts_with = "tau")]
        tau_k: Option<f64>,
        #[arg(long, requires = "tau_k", conflicts_with = "tau")]
        tau_m: Option<f64>,
        /// Cointegration overlay with ratio T/K.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Test independence of two panels.
    Independence {
        #[arg(long, value_name = "CSV")]
        u: PathBuf,
        #[arg(long, value_name = "CSV")]
        v: PathBuf,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Test for cointegration of rank at least r against none.
    Coint {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = hdcca::coint::DEFAULT_N_GRID)]
        n_grid: usize,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Generate synthetic data.
    Simulate {
        #[command(subcommand)]
        what: Simulate,
    },
    /// Build null quantile tables into the table directory.
    Tabulate {
        #[command(subcommand)]
        what: Tabulate,
        #[arg(long, default_value_t = 10_000, global = true)]
        nsamples: usize,
        /// Quantile levels, comma separated.
        #[arg(long, value_delimiter = ',', global = true)]
        alphas: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Simulate {
    /// Two Gaussian panels with planted canonical correlations.
    Panels {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
        /// Planted correlations, comma separated (none for independent panels).
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
        #[arg(long, value_name = "CSV")]
        out_u: PathBuf,
        #[arg(long, value_name = "CSV")]
        out_v: PathBuf,
    },
    /// Spectrum JSON of two independent Gaussian panels.
    CcaSpectrum {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
    },
    /// VAR(1) time series CSV with a random rank-r error-correction matrix.
    Var1 {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        rank: usize,
        #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
        scale: f64,
    },
    /// Spectrum JSON of detrended, demeaned correlations of a random walk.
    CointSpectrum {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Tabulate {
    /// Largest coordinate of the Laguerre limit.
    LaguerreMax {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
    },
    /// Edge sums at the default aspect ratio.
    Airy1 {
        #[arg(long, default_value_t = 1)]
        r_max: usize,
        #[arg(long, default_value_t = 100)]
        sim_size: usize,
    },
    /// Edge sums matched to a CCA problem of size (K, M, S).
    Airy1Cca {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 1)]
        r_max: usize,
    },
    /// Edge sums matched to the large-K cointegration test at (K, T).
    Airy1Coint {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        r_max: usize,
    },
    /// Partial sums of the Brownian functional eigenvalues.
    Brownian {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        r_max: usize,
        #[arg(long, default_value_t = hdcca::coint::DEFAULT_N_GRID)]
        n_grid: usize,
    },
}
