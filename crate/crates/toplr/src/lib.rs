//! File formats, configuration, the parallel replication runner and the
//! command implementations behind the `toplr` binary.

pub mod commands;
pub mod config;
pub mod data;
pub mod runner;

use std::path::PathBuf;


/// Everything a command can fail with, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input file, bad flag combination, unknown config key.
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] toplr_core::Error),
}

impl CliError {
    /// 2 for input and configuration problems, 3 for domain and numeric
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                toplr_core::Error::Config(_) | toplr_core::Error::NotFound(_) => 2,
                _ => 3,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
