use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamLaserError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver failed to converge: {0}")]
    NoConvergence(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("estimator error: {0}")]
    Estimator(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BeamLaserError>;
