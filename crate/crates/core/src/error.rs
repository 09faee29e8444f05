use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the TMFG / DBHT pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} has zero variance")]
    ZeroVariance { row: usize },

    #[error("similarity {value} at ({row}, {col}) lies outside [-1, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("negative dissimilarity {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("need at least {min} objects, got {n}")]
    TooSmall { n: usize, min: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("prefix must be at least 1")]
    InvalidPrefix,

    #[error("face {0:?} is not live")]
    StaleFace([usize; 3]),

    #[error("face {0:?} is unknown to the bubble tree")]
    UnknownFace([usize; 3]),

    #[error("vertex {vertex} cannot reach any converging bubble with assigned vertices")]
    Unassignable { vertex: usize },

    #[error("dendrogram node {child} has height {child_height} above its parent {parent} ({parent_height})")]
    MonotonicityViolation { child: usize, parent: usize, child_height: f64, parent_height: f64 },

    #[error("cluster count {k} outside 1..={n}")]
    InvalidCut { k: usize, n: usize },

    #[error("label vectors differ in length: {truth} vs {pred}")]
    LengthMismatch { truth: usize, pred: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
