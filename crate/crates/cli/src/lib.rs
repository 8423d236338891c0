//! Experiment driver behind the `proxsgd` binary.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
