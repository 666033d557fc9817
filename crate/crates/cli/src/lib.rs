//! Dataset I/O, configuration parsing, time-base rectification, benchmarks and the
//! command implementations behind the `nlos` binary.

pub mod bench;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod rectify;

pub use error::{CliError, CliResult, ConfigError, DatasetError};
