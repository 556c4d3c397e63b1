//! Canonical correlation analysis in high dimensions.
//!
//! The crate computes sample and population canonical correlations, the
//! Wachter limit of the null spectrum, spiked-model predictions, Jacobi and
//! MANOVA ensembles, independence tests and cointegration tests.
//!
//! Deterministic linear algebra and limit formulas are generic over
//! [`Real`] (`f32` or `f64`). Monte Carlo, tests and quantile tables run
//! in `f64`. Aliases with a `32` or `64` suffix fix the precision.
//!
//! Data panels are `K x S` matrices with one variable per row and one
//! observation per column.

pub mod cca;
pub mod coint;
pub mod ensembles;
pub mod error;
pub mod hyptest;
pub mod linalg;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod spectrum;
pub mod spike;
pub mod stats;
pub mod wachter;

pub use cca::{
    alignment_angle, population_cca, sample_cca, sample_spectrum, squared_correlations, CanonicalSystem, CovarianceTriple, DataPanel,
};
pub use coint::{
    coint_lambda_pm, coint_test_large, coint_test_small, johansen_lambdas, modified_lambdas, simulate_var1, trace_statistic,
    TimeSeriesPanel, VarModel,
};
pub use error::{Error, Result};
pub use hyptest::{independence_test_large, independence_test_small, Decision, QuantileTable, Regime, Statistic, TestReport};
pub use rng::Seed;
pub use scalar::Real;
pub use spectrum::{Spectrum, SpectrumMeta};
pub use spike::{detection_threshold, estimate_signals, predicted_angles, rho2_from_z, z_from_rho2, SpikeReport};
pub use wachter::WachterParams;

pub type DataPanel32 = cca::DataPanel<f32>;
pub type DataPanel64 = cca::DataPanel<f64>;
pub type CanonicalSystem32 = cca::CanonicalSystem<f32>;
pub type CanonicalSystem64 = cca::CanonicalSystem<f64>;
pub type CovarianceTriple32 = cca::CovarianceTriple<f32>;
pub type CovarianceTriple64 = cca::CovarianceTriple<f64>;
pub type WachterParams32 = wachter::WachterParams<f32>;
pub type WachterParams64 = wachter::WachterParams<f64>;
