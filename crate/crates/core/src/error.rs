use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density is not integrable: {0}")]
    NonIntegrable(String),

    #[error("modulus is not uniformly convex enough: {0}")]
    NotUniformlyConvex(String),

    #[error("quadrature on [{a}, {b}] did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature { a: f64, b: f64, estimate: f64, error: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("sampler mismatch: {0}")]
    SamplerMismatch(String),

    #[error("value outside the validity range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
