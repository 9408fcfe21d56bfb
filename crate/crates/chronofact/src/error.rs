//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid date {year:04}-{month:02}-{day:02}")]
    InvalidDate { year: i32, month: u32, day: u32 },

    #[error("unparsable date string `{0}`")]
    UnparsableDate(String),

    #[error("{0}")]
    InvalidScheme(String),

    #[error("quantile count {quantiles} exceeds {distinct} distinct delta values")]
    TooManyQuantiles { quantiles: usize, distinct: usize },

    #[error("no delta available for a content-level bucket assignment")]
    MissingContentDelta,

    #[error("scheme parse error at line {line}: {msg}")]
    SchemeParse { line: usize, msg: String },

    #[error("{path}:{line}: {msg}")]
    MalformedRow {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("expression index {index} outside temporal representation of length {len}")]
    DanglingExprIndex { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptyInput(_) => 2,
            Error::Diverged(_) | Error::Numerical(_) => 4,
            _ => 3,
        }
    }
}
