use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("Gram matrix is rank deficient (eigenvalue ratio {ratio:e} below tolerance {tol:e})")]
    RankDeficient { ratio: f64, tol: f64 },
    #[error("too few observations: K + M = {needed} exceeds S = {available}")]
    TooFewObservations { needed: usize, available: usize },
    #[error("squared correlation {value} outside [0, 1] beyond clipping tolerance")]
    CorrelationOutOfRange { value: f64 },
    #[error("projected ascent did not converge: {0}")]
    NotConverged(String),
    #[error("covariance matrix is singular or not positive definite: {0}")]
    SingularCovariance(String),
    #[error("vector maps to zero under the data panel")]
    ZeroImage,
    #[error("point is not in the open ordered simplex 1 > x_1 > ... > x_N > 0")]
    OutOfSimplex,
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("invalid Wachter parameters: {0}")]
    InvalidParams(String),
    #[error("argument lies on the branch cut or at a pole: {0}")]
    PoleOrBranchCut(String),
    #[error("lower edge is degenerate (tau_K == tau_M, lambda_- = 0)")]
    DegenerateLowerEdge,
    #[error("rho^2 = {rho2} is not above the detection threshold {threshold}")]
    Subcritical { rho2: f64, threshold: f64 },
    #[error("z = {z} does not exceed the upper edge lambda_+ = {edge}")]
    BelowEdge { z: f64, edge: f64 },
    #[error("implied rho^2 = {rho2} exceeds 1; data inconsistent with the one-spike model")]
    AboveOne { rho2: f64 },
    #[error("z = {z} coincides with a squared correlation of the reduced system")]
    PoleHit { z: f64 },
    #[error("quantile table mismatch: {0}")]
    TableMismatch(String),
    #[error("invalid asymptotic regime: {0}")]
    InvalidRegime(String),
    #[error("squared correlation {value} too close to 1 for the log-likelihood ratio")]
    UnitCorrelation { value: f64 },
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidDimensions(_) => "InvalidDimensions",
            Error::NonFinite { .. } => "NonFinite",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::TooFewObservations { .. } => "TooFewObservations",
            Error::CorrelationOutOfRange { .. } => "CorrelationOutOfRange",
            Error::NotConverged(_) => "NotConverged",
            Error::SingularCovariance(_) => "SingularCovariance",
            Error::ZeroImage => "ZeroImage",
            Error::OutOfSimplex => "OutOfSimplex",
            Error::ParameterRange(_) => "ParameterRange",
            Error::InvalidParams(_) => "InvalidParams",
            Error::PoleOrBranchCut(_) => "PoleOrBranchCut",
            Error::DegenerateLowerEdge => "DegenerateLowerEdge",
            Error::Subcritical { .. } => "Subcritical",
            Error::BelowEdge { .. } => "BelowEdge",
            Error::AboveOne { .. } => "AboveOne",
            Error::PoleHit { .. } => "PoleHit",
            Error::TableMismatch(_) => "TableMismatch",
            Error::InvalidRegime(_) => "InvalidRegime",
            Error::UnitCorrelation { .. } => "UnitCorrelation",
            Error::EmptySpectrum => "EmptySpectrum",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
