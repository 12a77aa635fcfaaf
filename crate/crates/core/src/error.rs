use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("window half-support {support} must be smaller than the observation length {len}")]
    WindowTooLong { support: usize, len: usize },

    #[error("frequency grid of size {grid} is smaller than 2M-1 = {required}")]
    GridTooSmall { grid: usize, required: usize },

    #[error("total power {0} is not positive")]
    NonPositivePower(f64),

    #[error("node {0} has zero degree")]
    IsolatedNode(usize),

    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("observation {0} has zero norm")]
    ZeroNorm(usize),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("ACF tail beyond lag {maxlag} is not negligible (estimated {tail:e})")]
    AcfTail { maxlag: usize, tail: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
