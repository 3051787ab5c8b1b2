use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("acceptance check failed: {0}")]
    Acceptance(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Acceptance(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<nullsim::Error> for CliError {
    fn from(e: nullsim::Error) -> Self {
        match e {
            nullsim::Error::NumericalBlowup { .. } | nullsim::Error::SingularPoint { .. } => CliError::Numerical(e.to_string()),
            nullsim::Error::Io(source) => CliError::Io { path: PathBuf::new(), source },
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
