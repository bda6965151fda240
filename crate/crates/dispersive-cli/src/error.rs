use std::path::PathBuf;

use thiserror::Error;

/// Failures of the runner, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config or arguments; `field` is the dotted path of the offending key.
    #[error("usage error in `{field}`: {reason}")]
    Usage { field: String, reason: String },
    #[error("{experiment}: {source}")]
    Numerical {
        experiment: String,
        #[source]
        source: dispersive::Error,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {what}: {reason}")]
    Output { what: String, reason: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl CliError {
    pub fn usage(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Usage { field: field.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Numerical { .. } | CliError::Output { .. } | CliError::Io { .. } => EXIT_NUMERICAL,
        }
    }

    /// Library error raised while running `experiment`. Parameter-domain
    /// failures become usage errors with the field prefixed by `section`.
    pub fn from_library(experiment: &str, section: &str, err: dispersive::Error) -> Self {
        match err {
            dispersive::Error::Domain { field, reason } => {
                let field = if field.contains('.') || section.is_empty() { field } else { format!("{section}.{field}") };
                CliError::Usage { field, reason }
            }
            dispersive::Error::Config(reason) => CliError::Usage { field: section.to_string(), reason },
            source => CliError::Numerical { experiment: experiment.to_string(), source },
        }
    }
}
