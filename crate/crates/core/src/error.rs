use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The input does not look like the expected file format at all
    /// (e.g. more than half of an event log failed to parse).
    #[error("format error: {0}")]
    Format(String),

    /// A single record or value failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph error: {0}")]
    Graph(String),

    /// The graph passed to clustering is not connected; callers should
    /// extract the giant component first.
    #[error(
        "graph is disconnected ({components} components); cluster the giant component instead"
    )]
    Disconnected { components: usize },

    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
