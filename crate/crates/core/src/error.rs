/// Errors reported by encoding, filtering and recovery routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("grid does not cover whole bands: {0}")]
    PartialBands(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("sampling grid too coarse: {0}")]
    Resolution(String),
    #[error("operator not well-defined for this signal/params: {0}")]
    NotWellDefined(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
