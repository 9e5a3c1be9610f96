use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral density must be strictly positive, got {value} at frequency {omega}")]
    NonPositiveSpectrum { omega: f64, value: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("design matrix is rank deficient (smallest/largest singular value = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("normal equations are singular")]
    SingularNormalEquations,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("log-likelihood became non-finite at iteration {iteration}")]
    NonFiniteLikelihood { iteration: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("too many failed replicates: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
