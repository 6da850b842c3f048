use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("singular value: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
