//! Configuration, orchestration and output formats for the `fracschro`
//! command-line runner.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, load_config_with, parse_config, ConfigError, Mode, Overrides, RunConfig};
pub use run::{run, RunError, RunOutcome};
