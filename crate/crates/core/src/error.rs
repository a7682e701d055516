use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ray-trace stall for angle {angle} at potential {deepest_potential:e}")]
    RayStall { angle: String, deepest_potential: f64 },

    #[error("equipotential {potential:e} lies below the figure-eight level {critical_level:e}")]
    FigureEight { potential: f64, critical_level: f64 },

    #[error("combinatorics: {0}")]
    Combinatorics(String),

    #[error("branch pinch near {location}")]
    BranchPinch { location: Complex64 },

    #[error("critical orbit is not renormalizable at level {level}: {reason}")]
    NonRenormalizable { level: usize, reason: String },

    #[error("exact angle arithmetic exhausted: {0}")]
    AngleBudget(String),

    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    #[error("nesting violation: {0}")]
    Nesting(String),

    #[error("point {point} lies on the curve (distance {distance:e})")]
    NearPassage { point: Complex64, distance: f64 },

    #[error("ambiguous preimage: candidates {first} and {second}")]
    AmbiguousPreimage { first: Complex64, second: Complex64 },

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("empty point set")]
    EmptySet,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
