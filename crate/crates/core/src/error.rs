use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by the exit category the command-line front end maps
/// them to: malformed input data, invalid arguments, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("size mismatch: {what} (expected {expected}, got {got})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("coloring is not proper: edge ({0}, {1}) is monochromatic")]
    ImproperColoring(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph with {0} nodes is too large for exact enumeration (limit 20)")]
    TooLargeForEnumeration(usize),

    #[error("missing node features")]
    MissingFeatures,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("rejection budget of {0} attempts exceeded")]
    RejectionBudget(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by malformed or unusable input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidData(_)
                | Error::Io(_)
                | Error::SelfLoop(_)
                | Error::NodeOutOfRange { .. }
                | Error::MissingFeatures
                | Error::RejectionBudget(_)
        )
    }

    /// True for errors caused by numerical breakdown.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
