//! Config files, built-in experiments, and on-disk artifacts.

pub mod config;
pub mod experiment;
pub mod manifest;
pub mod preset;

pub use config::{load_config, parse_config, Analysis, ExperimentConfig, GraphSpec, InitSpec};
pub use experiment::{
    evaluate, run_experiment, write_outputs, ExperimentOutcome, ExperimentResults,
};
pub use manifest::Manifest;
pub use preset::PresetName;
