use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coverage violation: behavior policy has zero probability for action {action} in state {state}")]
    CoverageViolation { state: usize, action: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no stationary distribution: {0}")]
    NoStationaryDistribution(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("power series sum of (gamma P)^k does not converge: {0}")]
    NonConvergentSeries(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("malformed dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
