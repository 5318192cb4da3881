use std::path::PathBuf;

use rmvqe::solver::ConvergenceTrace;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rmvqe::Error),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path} is not a valid result document: {message}")]
    Document { path: PathBuf, message: String },
}

impl CliError {
    /// 2 config, 3 convergence, 4 input file.
    pub fn exit_code(&self) -> i32 {
        use rmvqe::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Convergence { .. } => 3,
                E::Input(_) | E::Io(_) | E::Parse { .. } => 4,
                _ => 2,
            },
            CliError::Config { .. } => 2,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Document { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        use rmvqe::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Dimension(_) => "dimension",
                E::Parse { .. } => "parse",
                E::Schema(_) => "schema",
                E::Domain(_) => "domain",
                E::Layout(_) => "layout",
                E::Parameter(_) => "parameter",
                E::Input(_) => "input",
                E::UnsupportedLayout(_) => "unsupported_layout",
                E::Pole { .. } => "pole",
                E::Convergence { .. } => "convergence",
                E::Io(_) => "io",
            },
            CliError::Config { .. } => "config",
            CliError::Read { .. } => "read",
            CliError::Write { .. } => "write",
            CliError::Document { .. } => "document",
        }
    }

    pub fn trace(&self) -> Option<&ConvergenceTrace> {
        match self {
            CliError::Core(rmvqe::Error::Convergence { trace, .. }) => Some(trace),
            _ => None,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}
