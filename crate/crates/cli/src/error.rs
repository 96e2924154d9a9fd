use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Malformed JSON, unknown or missing field. The message carries the
    /// line and column.
    #[error("{message}")]
    Parse { message: String, line: usize, column: usize },
    #[error("{field}: {value} is outside [{lo}, {hi}]")]
    Range { field: String, value: String, lo: String, hi: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("config for `{found}` passed to `{expected}`")]
    WrongExperiment { expected: &'static str, found: &'static str },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse { message: e.to_string(), line: e.line(), column: e.column() }
    }
}

/// Where in a run a numerical failure happened.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Context {
    pub init: String,
    pub eta: Option<f64>,
    pub step: Option<usize>,
}

impl std::fmt::Display for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "init {}", self.init)?;
        if let Some(eta) = self.eta {
            write!(f, ", eta {eta}")?;
        }
        if let Some(step) = self.step {
            write!(f, ", step {step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure ({context}): {source}")]
    Numerical { context: Context, source: homogenizer::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
        }
    }
}
