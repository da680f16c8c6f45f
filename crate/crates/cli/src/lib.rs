//! Batch front end for the holepoint laboratory: JSON-config-driven
//! experiment orchestration and CSV/JSON report emission.

pub mod config;
pub mod fieldfile;
pub mod pipeline;
pub mod report;
pub mod serialize;

pub use config::ExperimentConfig;
pub use pipeline::{run, run_config_file, ExitStatus, RunOutput};
