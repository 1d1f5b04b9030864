use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("non-finite value {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("expected a square matrix, got {n_rows}x{n_cols}")]
    NotSquare { n_rows: usize, n_cols: usize },

    #[error("column {col} sums to {sum}, not 1")]
    NotStochastic { col: usize, sum: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixing weights must be non-negative and sum to 1, got ({0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),

    #[error("adjacency is not bipartite: edge ({row}, {col}) lies inside one partition")]
    NotBipartite { row: usize, col: usize },

    #[error("unknown relation `{0}` (expected an, aa or nn)")]
    UnknownRelation(String),

    #[error("seed {seed} is out of range for {n} nodes")]
    InvalidSeed { seed: usize, n: usize },

    #[error("series did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: unknown {kind} id `{id}`", path.display())]
    UnknownId {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        id: String,
    },

    #[error("unknown {kind} id `{id}`")]
    UnknownNode { kind: &'static str, id: String },

    #[error("no feature row for {kind} `{id}`")]
    MissingFeatures { kind: &'static str, id: String },

    #[error("no labeled nodes to train on")]
    NoLabeledNodes,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad input data rather than bad arguments or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownId { .. }
                | Error::UnknownNode { .. }
                | Error::MissingFeatures { .. }
                | Error::NoLabeledNodes
                | Error::Io { .. }
                | Error::Json { .. }
        )
    }
}
