use thiserror::Error;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("syndrome is not empty; {0} defects remain")]
    NonEmptySyndrome(usize),

    #[error("inconsistent syndrome: {0}")]
    InconsistentSyndrome(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("matching requires an even number of vertices, got {0}")]
    OddVertexCount(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("decoder produced an invalid correction: {0}")]
    InvalidCorrection(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
