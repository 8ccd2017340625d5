use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice dimension: {0}")]
    InvalidDimension(String),
    #[error("site index {index} out of range for lattice with {sites} sites")]
    SiteOutOfRange { index: usize, sites: usize },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("dimension mismatch: expected side {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("noise model rejected: {0}")]
    NoiseModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("threshold {0} is not in the declared threshold grid")]
    ThresholdNotInGrid(u32),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
