use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitude list is identically zero")]
    ZeroVector,
    #[error("pattern/amplitude lists differ in length ({patterns} vs {amplitudes})")]
    LengthMismatch { patterns: usize, amplitudes: usize },
    #[error("duplicate occupation pattern {0}")]
    DuplicatePattern(String),
    #[error("invalid occupation pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid site selection ({a}, {b}) for a chain of {n} atoms")]
    InvalidSites { a: usize, b: usize, n: usize },
    #[error("input is not Hermitian (max deviation {0:e})")]
    NonHermitianInput(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coincident atoms: zero separation")]
    ZeroDistance,
    #[error("zero coupling or van der Waals coefficient")]
    ZeroCoupling,
    #[error("non-positive input: {0}")]
    NonPositiveInput(&'static str),
    #[error("waypoint {waypoint} unreachable from site {from}")]
    UnreachableWaypoint { from: usize, waypoint: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("integrator step size underflow at t = {t:e} (h = {h:e})")]
    ToleranceNotMet { t: f64, h: f64 },
    #[error("realization {index} (seed {seed:#018x}) failed: {source}")]
    Realization {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("grid point {index} failed: {source}")]
    GridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
