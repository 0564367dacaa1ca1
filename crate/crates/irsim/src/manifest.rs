//! Run manifest written next to each CSV.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::sweep::SweepSpec;
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 over everything that determines the numbers.
    pub config_digest: String,
    pub seed: u64,
    pub trials: usize,
    pub block_size: usize,
    pub points: usize,
    pub rows: usize,
    /// Worker threads used. Does not affect results.
    pub threads: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl Manifest {
    pub fn new(spec: &SweepSpec, points: usize, rows: usize, threads: usize, started: f64, finished: f64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_digest: spec.digest(),
            seed: spec.seed,
            trials: spec.trials,
            block_size: spec.block_size,
            points,
            rows,
            threads,
            started_unix: started,
            finished_unix: finished,
            wall_seconds: (finished - started).max(0.0),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Csv(format!("manifest: {e}")))
    }
}

/// `results.csv` -> `results.csv.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
