use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("inconsistent state: {0}")]
    Consistency(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {diagnostic}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        diagnostic: String,
    },

    #[error("idx: wrong magic number {found:#010x} (expected {expected:#010x})")]
    IdxMagic { found: u32, expected: u32 },

    #[error("idx: payload length mismatch (header declares {expected} bytes, found {found})")]
    IdxLength { expected: usize, found: usize },

    #[error("checkpoint header: {0}")]
    CheckpointHeader(String),

    #[error("checkpoint shape mismatch for `{name}`: expected {expected:?}, found {found:?}")]
    CheckpointShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("checkpoint truncated: needed {needed} payload bytes, found {found}")]
    CheckpointTruncated { needed: usize, found: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
