//! Command-line front end for the vldp protocols.

pub mod bench;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod store;

pub use commands::{run, Cli};
pub use error::CliError;
