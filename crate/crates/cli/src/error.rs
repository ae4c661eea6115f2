use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_IO: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("solver failed at {count} of {total} points")]
    SolverFailure { count: usize, total: usize, report: String },
    #[error(transparent)]
    Core(#[from] frv_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Integrity(_) | CliError::Csv { .. } | CliError::Json { .. } => EXIT_INPUT,
            CliError::Core(frv_core::Error::InvalidConfig(_)) => EXIT_INPUT,
            CliError::Core(_) | CliError::SolverFailure { .. } => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
