//! CLI-level errors carrying the process exit code.

use thiserror::Error;

/// Anything that can abort a run, sorted by exit code: configuration
/// problems exit 1, I/O problems exit 2, numeric failures exit 3.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Io(_) => 2,
            AppError::Numeric(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        AppError::Io(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        AppError::Numeric(msg.into())
    }
}

impl From<rig_core::Error> for AppError {
    fn from(e: rig_core::Error) -> Self {
        match e {
            rig_core::Error::InvalidInput(m) => AppError::Config(m),
            rig_core::Error::Numeric(m) => AppError::Numeric(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
