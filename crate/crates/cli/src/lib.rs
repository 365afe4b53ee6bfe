//! Configuration schema and run orchestration for the `ocsm-lab` binary.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{Algorithm, ExperimentConfig, NetworkSpec, ParamMode, SetSpec};
pub use runner::{execute_run, execute_sweep, execute_verify, RunArtifacts};
