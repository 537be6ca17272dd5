//! Command-line front end for `bubble-core`: configuration parsing, curve
//! output and a path-parallel Monte Carlo driver.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;

pub use cli::{run, Cli};
pub use config::RunConfig;
pub use error::{CliError, Result};
