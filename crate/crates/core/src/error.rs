use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),

    #[error("unknown edge {0:?}")]
    UnknownEdge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog name {0:?}")]
    UnknownCatalog(String),

    #[error("adjacency matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("graph is not connected")]
    NotConnected,

    #[error("boundary-flagged graph rejected: {0}")]
    BoundaryRejected(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("iteration limit reached: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
