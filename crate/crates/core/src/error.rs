use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("domain is not strictly star-shaped about the given center (min (x - x0).n = {min})")]
    NotStarShaped { min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objects were built on different meshes")]
    MeshMismatch,

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("quadrature of exactness {requested} not available (max {max})")]
    QuadratureUnavailable { requested: usize, max: usize },

    #[error("matrix is singular to working precision at elimination step {step} (|pivot| = {pivot:e})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no propagating root: kh = {kh} lies in an evanescent band")]
    Evanescent { kh: f64 },

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
