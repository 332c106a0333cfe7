//! Command-line front end: config handling and subcommands.

pub mod commands;
pub mod config;

pub use commands::{CliError, CliResult};
pub use config::RunConfig;
