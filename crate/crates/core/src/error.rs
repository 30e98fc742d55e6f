use std::io;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: shape {shape:?} implies {expected} values, got {actual}")]
    Dimension {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("axis {axis} has extent {extent}; at least 2 is required")]
    DegenerateAxis { axis: usize, extent: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("bad tensor file: {0}")]
    Format(String),
    #[error("truncated tensor file: expected {expected} bytes, found {actual}")]
    Length { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("exact sign has no useful gradient; use tanh or softsign")]
    NonDifferentiable,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unsupported rank {0}; persistence supports ranks 1 to 3")]
    UnsupportedRank(usize),
    #[error("Wasserstein order must be >= 1, got {0}")]
    Order(f64),
    #[error("diagram contains a point with infinite death")]
    InfiniteDeath,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("correlation undefined: distance vector has zero variance")]
    UndefinedCorrelation,
    #[error("need at least 3 locations, got {0}")]
    TooFewLocations(usize),
    #[error("cannot sample a batch of {batch} from {available} examples")]
    Sampling { batch: usize, available: usize },
    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),
    #[error("training diverged at batch {batch}")]
    Diverged { batch: usize },
    #[error("malformed diagram line {line}: {reason}")]
    DiagramParse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by unreadable or inconsistent input data, as
    /// opposed to numerically degenerate inputs.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::Shape(_)
                | Error::Axis { .. }
                | Error::Format(_)
                | Error::Length { .. }
                | Error::Config(_)
                | Error::UnsupportedRank(_)
                | Error::Order(_)
                | Error::Sampling { .. }
                | Error::DiagramParse { .. }
                | Error::Io(_)
        )
    }
}
