//! Configuration, CSV files and run manifests.

pub mod config;
pub mod manifest;
pub mod tables;

pub use config::{parse_config, parse_config_str, ControllerSpec, RunConfig, Strategy, DEFAULT_CONFIG};
pub use manifest::RunManifest;
pub use tables::{
    read_experiment_csv, read_trajectory_csv, write_trajectory, write_trajectory_csv, ExperimentData,
};
