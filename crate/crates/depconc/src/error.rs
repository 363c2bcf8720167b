use thiserror::Error;

/// Errors shared across the crate.
///
/// Operations that are defined to degrade gracefully (an inapplicable bound, a
/// Gamma construction whose precondition fails) return flag-carrying values
/// instead of these errors, so comparison tables can still be assembled.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state space has {states} states, exceeding the cap of {cap}")]
    CapExceeded { states: usize, cap: usize },

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid function table: {0}")]
    InvalidFunction(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("conditioning event has probability zero")]
    ZeroConditioningEvent,

    #[error("transport solver failed: {0}")]
    SolverFailure(String),

    #[error("Dobrushin uniqueness condition fails: spectral radius {0:.6} is not below 1 - 1e-9")]
    UniquenessFails(f64),

    #[error("law is not in the {expected} representation")]
    WrongRepresentation { expected: &'static str },

    #[error("pair potential must be strictly positive everywhere")]
    NonpositivePotential,

    #[error("invalid block partition: {0}")]
    BadPartition(String),

    #[error("invalid gamma matrix: {0}")]
    InvalidGamma(String),

    #[error("weights have squared sum {0:.6}, exceeding 1")]
    WeightsTooLarge(f64),

    #[error("coordinate constants are required for metrics that are not scaled-trivial")]
    MissingCoordinateConstants,

    #[error("quadrature failed to reach tolerance: achieved {achieved:e}")]
    QuadratureFailure { achieved: f64 },

    #[error("soundness violation: {0}")]
    SoundnessViolation(Box<crate::validate::SoundnessCounterexample>),
}

pub type Result<T> = std::result::Result<T, Error>;
