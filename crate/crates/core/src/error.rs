use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum VolumaError {
    #[error("empty input")]
    EmptyInput,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("insufficient data: need at least {need}, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("truncated file at byte offset {offset}")]
    TruncatedFile { offset: u64 },

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("cannot evaluate {model}: {message}")]
    EvaluationError { model: String, message: String },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeError { expected: usize, got: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl VolumaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VolumaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        VolumaError::ParseError {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, VolumaError>;
