//! Configuration, pipelines and output for the `symtest` command.

pub mod app;
pub mod config;
pub mod output;
pub mod run;

pub use app::{execute, Cli, EXIT_INCONSISTENT, EXIT_OK, EXIT_USAGE};
pub use config::{parse_config, ConfigError, Format, Method, RunConfig};
pub use run::{run_sweep, RunError, SweepResult, SweepRow};
