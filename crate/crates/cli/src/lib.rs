//! Batch front end: JSON config in, JSON report (and CSV tables) out.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use report::{Report, Status};
