//! Command-line front end for structured factor models: synthetic data,
//! fitting, penalized selection and Monte-Carlo rate checks, all with
//! file-based I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod rate;
pub mod simulate;

pub use config::{ExperimentConfig, Scenario};
pub use error::{CliError, CliResult};
pub use rate::RateReport;
