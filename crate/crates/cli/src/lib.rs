//! Reproducible experiment runner over the `mestim` library.
//!
//! A run is fully determined by its configuration (including the master seed). Each
//! command writes to `<root>/<command>-<hash>/`, where `<root>` comes from
//! `MESTIM_RUN_ROOT` (default `runs/`) and `<hash>` is a digest of the config.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, RunSummary};
pub use config::ExperimentConfig;
pub use error::CliError;
