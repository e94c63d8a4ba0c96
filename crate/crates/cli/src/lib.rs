//! Configuration parsing and output writers for the `acquire` binary.

pub mod config;
pub mod output;

pub use config::{parse_config, ConfigError};
