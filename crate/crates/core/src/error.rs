use thiserror::Error;

use crate::model::Path;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid polarization state: {0}")]
    InvalidPolarization(String),

    #[error("invalid interaction window: {0}")]
    InvalidWindow(String),

    #[error("invalid frequency distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid interferometer configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("density matrix is not normalized (trace = {trace})")]
    NotNormalized { trace: f64 },

    #[error("time {t} outside the valid range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("conditioning on port {port} with detection probability {probability:e}")]
    ImpossibleOutcome { port: Path, probability: f64 },

    #[error("coherence factor |f| = {modulus:e} at t = {t} is too small to define a Kraus phase")]
    ZeroCoherenceFactor { t: f64, modulus: f64 },

    #[error("|Lambda| stays below {floor:e} over the scan range")]
    PeakNotFound { floor: f64 },

    #[error("estimator needs no interference at the output beam splitter (|kappa_H| = {kappa_h:e}, |kappa_V| = {kappa_v:e})")]
    EstimatorOutOfRegime { kappa_h: f64, kappa_v: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid frequency grid: {0}")]
    InvalidFrequencyGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
