use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] chlab_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

pub fn compute_exit_code(e: &chlab_core::Error) -> i32 {
    match e {
        chlab_core::Error::Convergence { .. } => EXIT_CONVERGENCE,
        chlab_core::Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_DOMAIN,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Compute(e) => compute_exit_code(e),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Compute(e) => e.kind(),
        }
    }
}

/// Machine-readable failure, either of the whole run or of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub index: Option<usize>,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn at(index: usize, e: &chlab_core::Error) -> Self {
        ErrorRecord {
            index: Some(index),
            kind: e.kind(),
            message: e.to_string(),
            exit_code: compute_exit_code(e),
        }
    }

    pub fn fatal(e: &CliError) -> Self {
        ErrorRecord {
            index: None,
            kind: e.kind(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "index": self.index,
            "kind": self.kind,
            "message": self.message,
            "exit_code": self.exit_code,
        })
    }
}
