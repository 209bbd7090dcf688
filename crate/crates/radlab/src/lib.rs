//! Command-line front end of `radlab-core`: JSON configuration, the five
//! subcommands and their CSV outputs.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod threads;

pub use config::RunConfig;
pub use error::CliError;
