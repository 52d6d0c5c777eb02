use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FckError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} is empty")]
    EmptyInput(String),

    #[error("line {line}: duplicate item {item:?} in transaction")]
    DuplicateItem { line: usize, item: String },

    #[error("row {row}, column {col}: value {value} outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumeric { row: usize, col: usize, cell: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("atom {atom} out of range for {n_cols} columns")]
    AtomOutOfRange { atom: usize, n_cols: usize },

    #[error("invalid feature set: {0}")]
    InvalidFeatureSet(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("similarity requires binary columns")]
    NotBinary,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
}

pub type Result<T> = std::result::Result<T, FckError>;
