use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate geometry: {0}")]
    Geometry(String),
    #[error("{what} would reach {requested}, above the cap of {cap}")]
    Resource {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
