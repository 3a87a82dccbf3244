use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: row {row} has {found} coordinates, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("asymmetric entries at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("negative distance {value} at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("nonzero diagonal entry {value} at index {i}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("triangle inequality violated: d[{i}][{j}] = {dij} > d[{i}][{k}] + d[{k}][{j}] = {bound}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dij: f64,
        bound: f64,
    },

    #[error("index {index} out of bounds for size {n}")]
    IndexOutOfBounds { index: usize, n: usize },

    #[error("sample size mismatch: {x} vs {y}")]
    SizeMismatch { x: usize, y: usize },

    #[error("sample too small: n = {n}, the U-statistic needs at least {min} observations")]
    SampleTooSmall { n: usize, min: usize },

    #[error("naive evaluation limited to n <= {max}, got {n}")]
    TooLargeForNaive { n: usize, max: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid probability {0}; expected a value in (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("metric {0} cannot be computed from points")]
    UnsupportedMetric(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}
