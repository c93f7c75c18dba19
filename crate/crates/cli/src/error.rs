use std::fmt;
use std::path::Path;

use mapbench::{EvalError, MapError};

/// A failure classified by process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 1).
    Usage(String),
    /// Missing, unreadable or unwritable files (exit 2).
    Io(String),
    /// The evaluation itself failed (exit 3).
    Eval(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Eval(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Eval(m) => write!(f, "evaluation failed: {m}"),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::InvalidGrid(_) | MapError::OutOfBounds { .. } => CliError::Eval(e.to_string()),
            MapError::Io { .. } | MapError::BadImage { .. } | MapError::BadMetadata { .. } => {
                CliError::Io(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Map(m) => m.into(),
            other => CliError::Eval(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
