//! Command-line front end: reads a scenario file, runs one analysis and writes
//! CSV/JSON artifacts.

pub mod commands;
pub mod error;
pub mod scenario;

pub use error::{CliError, Result};
pub use scenario::{Mode, Scenario};
