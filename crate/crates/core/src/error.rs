use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}, column {column}: {message}")]
    Parse {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{context}: {message}")]
    Format { context: String, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("class {class} has {count} instance(s); at least 2 are required")]
    DegenerateClass { class: u8, count: usize },

    #[error("split would leave class {class} with no {side} instances")]
    EmptySplitSide { class: u8, side: &'static str },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("insufficient data for {what}: need at least {needed}, found {found}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("unknown respondent `{id}`; available: {}", available.join(", "))]
    UnknownRespondent { id: String, available: Vec<String> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by malformed or inconsistent user input.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
