use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not a factor")]
    NotFactor(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("column `{column}`: level `{level}` is not a number")]
    UnparseableLevel { column: String, level: String },
    #[error("column `{0}` is entirely missing")]
    AllMissing(String),
    #[error("column `{0}` has missing values; impute first")]
    Incomplete(String),
    #[error("column `{0}` has a single distinct value")]
    Degenerate(String),
    #[error("cannot discretize `{column}`: {reason}")]
    Discretization { column: String, reason: String },
    #[error("invalid column `{column}`: {reason}")]
    InvalidColumn { column: String, reason: String },
    #[error("graph would contain a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("arc {0} -> {1} does not exist")]
    MissingArc(String, String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown level `{level}` for node `{node}`")]
    UnknownLevel { node: String, level: String },
    #[error("inconsistent arc constraints: {0}")]
    Constraints(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("impossible evidence")]
    ImpossibleEvidence,
    #[error("evidence unreachable")]
    EvidenceUnreachable,
    #[error("unsupported document version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("operation cancelled")]
    Cancelled,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
