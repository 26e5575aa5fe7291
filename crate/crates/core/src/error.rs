use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("criterion evaluation produced NaN at index {index}")]
    NanCriterion { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown criterion kind `{0}`")]
    UnknownKind(String),

    #[error("tabulated lookup out of range: grid row {row}, observation column {column} (table is {rows}x{columns})")]
    TableOutOfRange { row: usize, column: usize, rows: usize, columns: usize },

    #[error("tabulated criteria are indexed by grid position; use `CriterionSpec::evaluate`")]
    TabulatedNeedsIndex,

    #[error("observation does not match the {0} criterion")]
    ObservationMismatch(&'static str),

    #[error("parameter has dimension {actual}, criterion expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no closed form registered for {0}")]
    NoClosedForm(String),

    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("degenerate sampler: all {samples} draws are identical")]
    DegenerateSampler { samples: usize },

    #[error("argmax distributions live on different grids")]
    GridMismatch,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("complement block is singular for subset {subset:?}")]
    SingularSubset { subset: Vec<usize> },

    #[error("operation requires a two-axis product grid")]
    NotProductGrid,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
