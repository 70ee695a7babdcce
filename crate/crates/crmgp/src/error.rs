use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    /// A numerical failure, tagged with the stage that raised it.
    #[error("numerical failure in {stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: crmgp_core::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed CSV in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl RunError {
    pub fn numerical(stage: &'static str) -> impl FnOnce(crmgp_core::Error) -> RunError {
        move |source| RunError::Numerical { stage, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> RunError {
        let path = path.into();
        move |source| RunError::Io { path, source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } | RunError::Format { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
