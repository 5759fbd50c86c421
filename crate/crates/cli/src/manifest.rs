//! Run manifest: config echo, diagnostics, timings and checksummed artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Mode};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(out: &Path, name: &str) -> std::io::Result<Self> {
        let data = std::fs::read(out.join(name))?;
        Ok(Self {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }

    /// Whether the file on disk still matches the recorded checksum.
    pub fn verify(&self, out: &Path) -> bool {
        Self::of(out, &self.path).is_ok_and(|a| a == *self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    pub config: Option<ExperimentConfig>,
    pub status: Status,
    pub exit_code: i32,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    /// Hypothesis report of the normalized problem.
    pub report: Option<Value>,
    /// Solver diagnostics keyed by stage.
    pub results: BTreeMap<String, Value>,
    /// Scalar outcomes of the run.
    pub summary: BTreeMap<String, Value>,
    /// Seconds per stage; the only nondeterministic part of a manifest.
    pub wall_times: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(mode: Mode, config: Option<ExperimentConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode,
            config,
            status: Status::Ok,
            exit_code: 0,
            failed_stage: None,
            error: None,
            report: None,
            results: BTreeMap::new(),
            summary: BTreeMap::new(),
            wall_times: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn write(&self, out: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(out)?;
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(out.join(MANIFEST_NAME), text + "\n")
    }

    pub fn read(out: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(out.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// The manifest with timings cleared, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            wall_times: BTreeMap::new(),
            ..self.clone()
        }
    }
}
