use std::path::PathBuf;

use thiserror::Error;

/// Failures that stop a run before a summary can be produced. All of them
/// map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", location.map(|(l, c)| format!("line {l}, column {c}: ")).unwrap_or_default())]
    Parse {
        message: String,
        location: Option<(usize, usize)>,
    },

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] emergent_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}
