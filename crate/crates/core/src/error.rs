//! Crate-wide error type.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by model construction, analysis, and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Interaction forces are strictly positive by model assumption.
    #[error("force must be strictly positive and finite, got {0}")]
    NonPositiveForce(f64),

    /// The reproduction gain must be positive.
    #[error("gain alpha must be strictly positive and finite, got {0}")]
    InvalidAlpha(f64),

    /// The reproduction exponent must be strictly negative; zero leaves the
    /// equilibrium point undefined.
    #[error("exponent beta must be strictly negative and finite, got {0}")]
    InvalidBeta(f64),

    /// Voluntary gains of the general interaction are positive by definition.
    #[error("voluntary gain must be strictly positive and finite, got {0}")]
    InvalidVoluntaryGain(f64),

    /// The variable feedback gain is bounded to `[0, 1]`.
    #[error("variable gain must lie in [0, 1], got {0}")]
    GainOutOfRange(f64),

    /// A simulated force left the positive domain the model is defined on.
    #[error("interaction force left the positive domain at phase {phase} (value {value})")]
    DomainExit { phase: usize, value: f64 },

    /// Not enough input for the requested analysis.
    #[error("need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// Input that makes the requested estimate unidentifiable.
    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),

    /// A t statistic is undefined when the sample variance vanishes.
    #[error("sample variance is zero")]
    ZeroVariance,

    /// Paired inputs must have equal length.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Rejected configuration value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    /// The servo integration produced NaN or infinity.
    #[error("simulation state became non-finite at step {0}")]
    NonFiniteState(usize),
}
