use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("series did not converge: {0}")]
    Convergence(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("marked point order error: {0}")]
    Order(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integration error at t={t}: {msg}")]
    Integration { t: f64, msg: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("step error: {0}")]
    Step(String),
    #[error("sample size error: need at least {need}, got {got}")]
    SampleSize { need: usize, got: usize },
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
