use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmpnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("NaN in input at index {index}")]
    NanInput { index: usize },

    #[error("invalid lambda: {0}")]
    InvalidLambda(String),

    #[error("unknown lambda preset `{0}`")]
    UnknownPreset(String),

    #[error("parameter `{name}` out of range: {detail}")]
    OutOfRange { name: &'static str, detail: String },

    #[error("unsupported norm {norm} for {context}")]
    UnsupportedNorm { norm: String, context: &'static str },

    #[error("invalid instance field `{field}`: {detail}")]
    Validation { field: String, detail: String },

    #[error("parse error at line {line}, column {column}: {detail}")]
    Parse { line: usize, column: usize, detail: String },

    #[error("enumeration cap exceeded: {count} > {cap} ({what}); use a heuristic solver (h1/h2) instead")]
    CapExceeded { what: &'static str, count: f64, cap: f64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("empty open set")]
    EmptyOpenSet,

    #[error("i/o error on {path}: {detail}")]
    Io { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, OmpnError>;

impl OmpnError {
    pub(crate) fn validation(field: impl Into<String>, detail: impl Into<String>) -> Self {
        OmpnError::Validation {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        OmpnError::Io {
            path: path.display().to_string(),
            detail: err.to_string(),
        }
    }
}
