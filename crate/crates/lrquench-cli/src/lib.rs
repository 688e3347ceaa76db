//! Batch front end for `lrquench`: config parsing, the subcommands and their
//! CSV, JSON and SVG artifacts.

pub mod commands;
pub mod config;
pub mod plot;

pub use commands::{load_config, CliError, Command, Outcome, Run};
pub use config::RunConfig;
