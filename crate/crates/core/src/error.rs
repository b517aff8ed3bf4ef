use thiserror::Error;

/// Errors raised by the pricing, hedging and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The market admits arbitrage or is degenerate.
    #[error("market parameter violation: {0}")]
    ParameterViolation(String),

    /// A payoff does not belong to the supported convex class.
    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),

    /// A state string or move vector does not fit the market.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The requested computation is beyond the size this routine supports.
    #[error("instance too large: {0}")]
    ScaleExceeded(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("step mismatch: expected a state at step {expected}, got step {actual}")]
    StepMismatch { expected: usize, actual: usize },

    #[error("step {step} out of range for a {num_steps}-step market")]
    StepOutOfRange { step: usize, num_steps: usize },

    /// A numerical identity that must hold did not hold within tolerance.
    #[error("verification failure: {0}")]
    VerificationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
