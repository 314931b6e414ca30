//! Configuration, presets and run orchestration for the dynamo solver.

pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, RunConfig};
pub use runner::{execute, RunError, RunSummary};
