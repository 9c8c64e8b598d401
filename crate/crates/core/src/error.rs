use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating inputs or producing outputs.
#[derive(Debug, Error)]
pub enum SimError {
    /// The scenario text is not well-formed JSON.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// The JSON is well-formed but does not match the scenario schema
    /// (unknown key, wrong type, missing field).
    #[error("schema error: {0}")]
    Schema(String),
    /// A value violates a semantic constraint. `key` names the offending field.
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, SimError::Io { .. })
    }
}

impl From<serde_json::Error> for SimError {
    fn from(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Syntax | Category::Eof => SimError::Syntax {
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            },
            Category::Data => SimError::Schema(err.to_string()),
            Category::Io => SimError::Schema(err.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
