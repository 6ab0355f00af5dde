use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("operands live on different lattices")]
    GridMismatch,

    #[error("incommensurate grids: {0}")]
    IncommensurateGrids(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter set: {0}")]
    InvalidParameters(String),

    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),

    #[error("blow-up/instability at t = {t_last}: {reason}")]
    Instability { t_last: f64, reason: String },

    #[error("reference not converged: {0}")]
    ReferenceNotConverged(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed grid file: {0}")]
    MalformedFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
