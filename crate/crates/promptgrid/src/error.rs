//! Crate-wide error type.
//!
//! Variants map onto the failure classes surfaced by the CLI: data-shaped
//! problems exit with code 1, wire-level problems with code 2.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (corpus files, prediction files).
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// Training preconditions violated (empty train set, class without samples).
    #[error("train error: {0}")]
    Train(String),

    /// Template construction or rendering failure.
    #[error("template error: {0}")]
    Template(String),

    /// Prompt plus response budget does not fit the model's context window.
    #[error(
        "budget error: prompt for model '{model}' needs ~{estimated_tokens} prompt tokens \
         plus {max_response_tokens} response tokens, exceeding the context window of {context_window}"
    )]
    Budget {
        model: String,
        estimated_tokens: usize,
        max_response_tokens: usize,
        context_window: usize,
    },

    /// Network failure or retriable HTTP status that survived all retries.
    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },

    /// Endpoint rejected the request or returned a body we cannot interpret.
    #[error("protocol error for {url}{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Protocol {
        url: String,
        status: Option<u16>,
        message: String,
    },

    /// Run directory does not match the config being resumed.
    #[error("resume error for {}: config drift in {}", run_dir.display(), fields.join(", "))]
    Resume {
        run_dir: PathBuf,
        fields: Vec<String>,
    },

    /// Record files could not be scored.
    #[error("score error: {0}")]
    Score(String),

    #[error("io error for {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn template(msg: impl Into<String>) -> Self {
        Error::Template(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code contract: 0 success, 1 data-class errors, 2 wire-class errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Transport { .. } | Error::Protocol { .. } => 2,
            _ => 1,
        }
    }
}
