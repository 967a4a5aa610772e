//! Command-line front end: configuration, the run pipeline and subcommands.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{dispatch, Cli, CliError, Command};
pub use config::{parse_config, validate_config, ConfigError, RunConfig};
