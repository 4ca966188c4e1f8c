//! Command-line companion to the simulation library: TOML run configs, CSV
//! artifacts, and the subcommand implementations behind the `cruise` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::CliError;
