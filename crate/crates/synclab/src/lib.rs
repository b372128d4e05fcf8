//! Scenario files, run artifacts and the `synclab` command line on top of `synclab-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;

pub use config::ScenarioFile;
pub use error::CliError;
