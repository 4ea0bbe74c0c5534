use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const CHECK_FAILED: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("invalid config: {0}")]
    Config(String),

    /// The config parsed but does not describe a valid problem.
    #[error("invalid problem in config: {0}")]
    Problem(weak_euler::Error),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        source: weak_euler::Error,
    },

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CliError {
    pub fn numerical(context: impl Into<String>) -> impl FnOnce(weak_euler::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => exit::NUMERICAL,
            _ => exit::USAGE,
        }
    }
}
