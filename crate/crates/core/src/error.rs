use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid algorithm or experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An input item violates the packing preconditions.
    #[error("item {index}: {reason}")]
    Item { index: usize, reason: String },

    #[error("exact enumeration refused: {count} items exceeds the limit of {limit}")]
    TooManyItems { count: usize, limit: usize },

    /// A packing does not match the instance or parameters it is checked against.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// A produced packing failed its viability check.
    #[error("viability failure: {0}")]
    Unviable(String),

    /// Instance or packing file does not follow the schema.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
