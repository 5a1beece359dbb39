use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: entry ({row},{col}) differs from its transpose by {delta:e}")]
    NotSymmetric { row: usize, col: usize, delta: f64 },

    #[error("adjacency entry ({row},{col}) = {value} is not 0 or 1")]
    NotBinary { row: usize, col: usize, value: f64 },

    #[error("adjacency diagonal entry ({0},{0}) is nonzero; self-loops are not supported")]
    SelfLoop(usize),

    #[error("matrix is not positive semidefinite: eigenvalue {0:e} below tolerance")]
    NotPsd(f64),

    #[error("columns are not orthonormal: max |U^T U - I| = {0:e}")]
    NotOrthonormal(f64),

    #[error("negative weight {value} at graph {graph}, dimension {dim}")]
    NegativeWeight { graph: usize, dim: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("edge probability {value} at ({row},{col}) outside [0,1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error comes from malformed or inconsistent input data
    /// (as opposed to bad arguments or a numerical breakdown).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric { .. }
                | Error::NotBinary { .. }
                | Error::SelfLoop(_)
                | Error::DimensionMismatch(_)
                | Error::IndexOutOfRange { .. }
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::NotPsd(_) | Error::NotOrthonormal(_) | Error::ProbabilityOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
