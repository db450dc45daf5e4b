//! Subcommand implementations.

pub mod experiment;
pub mod fit;
pub mod report;
pub mod servo;
pub mod simulate;
pub mod stability;
