//! Configuration, initial data and file formats.

pub mod config;
pub mod initial;
pub mod output;

pub use config::{parse_config, render, ConfigError, DensityInit, KineticInit, SimConfig, VelocityInit};
pub use initial::{generate_initial, predicted_ceiling, Scenario};
pub use output::{dump_snapshot, load_snapshot, read_snapshot, read_timeseries, write_snapshot, write_timeseries};
