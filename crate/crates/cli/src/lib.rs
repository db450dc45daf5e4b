//! Pipeline front-end: configuration, CSV/JSON ingestion and emission, and
//! command orchestration for the force-interaction toolkit.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
