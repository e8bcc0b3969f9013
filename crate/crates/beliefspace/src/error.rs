use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors surfaced by the file formats and commands, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: beliefspace_core::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse { .. }
            | CliError::Io { .. }
            | CliError::Data { .. }
            | CliError::Invalid(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn data(context: impl Into<String>) -> impl FnOnce(beliefspace_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Data { context, source }
    }
}
