//! Crate-wide error type.
//!
//! Every variant maps to a short machine-parseable category string, which the
//! `legr` binary prints as `error[<category>]: <message>` on failure.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at `{context}`: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid mask: {0}")]
    Mask(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error("infeasible FLOP target {zeta}: minimal achievable ratio is {min_ratio:.6}")]
    Infeasible { zeta: f64, min_ratio: f64 },

    #[error("fingerprint mismatch: file was produced for graph {found}, current graph is {expected}")]
    Fingerprint { expected: String, found: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("engine state error: {0}")]
    Engine(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable one-word category used by the CLI's one-line error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Parse { .. } => "parse",
            Error::Graph(_) => "graph",
            Error::Mask(_) => "mask",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Infeasible { .. } => "infeasible",
            Error::Fingerprint { .. } => "fingerprint",
            Error::Checkpoint(_) => "checkpoint",
            Error::Engine(_) => "engine",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
