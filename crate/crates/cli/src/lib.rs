//! Command-line front end: experiment configs, the built-in coefficient
//! library, mode dispatch and run manifests.

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{Coefficient, ConfigError, ExperimentConfig, Mode};
pub use manifest::{Artifact, RunManifest, Status};
pub use run::{fail_early, run, RunError, RunOutcome};
