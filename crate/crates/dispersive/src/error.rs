use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Domain { field: String, reason: String },
    #[error("kernel evaluated at coincident points")]
    Singularity,
    #[error("integral diverges: {0}")]
    Divergence(String),
    #[error("accuracy guard tripped: {0}")]
    Accuracy(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("near resonance: smallest singular value {0:e} of 1 + R0 V")]
    NearResonance(f64),
    #[error("fit: {0}")]
    Fit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(field: &str, reason: impl Into<String>) -> Self {
        Error::Domain { field: field.to_string(), reason: reason.into() }
    }
}
