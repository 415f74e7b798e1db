use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate document of length {len}: co-occurrences need at least two words")]
    DegenerateDocument { len: usize },

    #[error("cannot remove {requested} documents from a corpus of {available}")]
    CannotEmptyCorpus { requested: usize, available: usize },

    #[error("forget set is inconsistent with the corpus: entry ({row}, {col}) would become {value:e}")]
    InconsistentForgetSet { row: usize, col: usize, value: f64 },

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "forget set of {requested} documents exceeds the deletion capacity \
         (capacity {capacity}, anchor-stability bound {anchor_bound})"
    )]
    CapacityExceeded {
        requested: usize,
        capacity: usize,
        anchor_bound: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error("bundle version mismatch: found {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapacityExceeded { .. } => 2,
            Error::RankDeficient(_) | Error::NonConvergence { .. } | Error::Numerical(_) => 3,
            Error::CorruptBundle(_)
            | Error::VersionMismatch { .. }
            | Error::Format(_)
            | Error::Io(_) => 4,
            _ => 1,
        }
    }
}
