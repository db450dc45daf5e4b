//! Discrete-event physical human-robot force interaction toolkit.
//!
//! A human asked to reproduce a force does so with a systematic,
//! level-dependent bias. Closing the loop with a robot that replays the
//! human's force turns that bias into an implicit feedback controller: the
//! interaction force is pulled toward the person's implicit equilibrium
//! point when far from it, while reproduction noise destabilizes a band
//! around the point. This crate implements the pieces needed to simulate
//! and analyze that loop:
//!
//! * [`bias_model`]: the power-law reproduction bias and its derived
//!   quantities (implicit gain, implicit equilibrium point),
//! * [`dynamics`]: the alternating-phase interaction map and its
//!   general form with voluntary gains,
//! * [`stability`]: evaluation values, the Lyapunov identity chain, and
//!   the unstable-region estimator,
//! * [`fitting`]: nonlinear least squares for the transfer model,
//! * [`stats`]: the one-sided t tests and the outlier rule,
//! * [`experiments`]: seeded synthetic agents and experiment protocols,
//! * [`servo`]: a one-axis motor simulation of the force/position
//!   controllers with disturbance and reaction-torque observers.
//!
//! All numerics are generic over the scalar type through [`Float`]; the
//! aliases below fix the common double-precision instantiation.

pub mod bias_model;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod float;
pub mod servo;
pub mod stability;
pub mod stats;

pub use error::{Error, Result};
pub use float::Float;

/// Double-precision force level.
pub type ForceLevel = bias_model::ForceLevel<f64>;
/// Double-precision bias-model parameters.
pub type BiasParameters = bias_model::BiasParameters<f64>;
/// Double-precision interaction trace.
pub type InteractionTrace = dynamics::InteractionTrace<f64>;
/// Double-precision general-interaction gains.
pub type GeneralInteractionParams = dynamics::GeneralInteractionParams<f64>;
/// Double-precision unstable region.
pub type UnstableRegion = stability::UnstableRegion<f64>;
/// Double-precision evaluation sample.
pub type EvaluationSample = stability::EvaluationSample<f64>;
/// Double-precision reproduction trial.
pub type ReproductionTrial = fitting::ReproductionTrial<f64>;
/// Double-precision fit result.
pub type FitResult = fitting::FitResult<f64>;
/// Double-precision test result.
pub type TestResult = stats::TestResult<f64>;
/// Double-precision synthetic-agent configuration.
pub type NoisyHumanConfig = experiments::NoisyHumanConfig<f64>;
