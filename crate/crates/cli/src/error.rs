use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] deadcore::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use deadcore::Error as E;
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => EXIT_CONFIG,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
            CliError::Core(E::Params(_) | E::Dimension(_) | E::Grid(_) | E::BorderlineExponent { .. }) => EXIT_CONFIG,
            CliError::Core(E::NotConverged { .. } | E::Diverged { .. }) => EXIT_NOT_CONVERGED,
            CliError::Io { .. } | CliError::Core(_) | CliError::Other(_) => EXIT_OTHER,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
