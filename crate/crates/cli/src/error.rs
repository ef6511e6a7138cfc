use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent input, naming the field at fault.
    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] polyellipse::Error),

    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for input errors, 3 for non-convergence, 4 for infeasible selection.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NotConverged(_) => 3,
            Self::Solver(polyellipse::Error::Infeasible(_)) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
