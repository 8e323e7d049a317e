use thiserror::Error;

/// Errors raised by graph construction, metrics and protocol steps.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("random geometric graph still disconnected after {attempts} attempts")]
    Unconnected { attempts: usize },

    #[error("graph is disconnected (algebraic connectivity {alpha:e})")]
    Disconnected { alpha: f64 },

    #[error("edge index {index} out of range for graph with {edges} edges")]
    EdgeOutOfRange { index: usize, edges: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("graph parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
