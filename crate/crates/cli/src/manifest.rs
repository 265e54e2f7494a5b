use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one command invocation, written next to its artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_path: Option<PathBuf>,
    /// SHA-256 of the scenario file bytes that were parsed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_file_sha256: Option<String>,
    /// Digest of the resolved in-memory scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gamma_grid_db: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials_per_point: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    pub manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(argv: &[String]) -> Self {
        let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: argv.to_vec(),
                scenario_path: None,
                scenario_file_sha256: None,
                scenario_digest: None,
                scenario: None,
                gamma_grid_db: Vec::new(),
                trials_per_point: None,
                master_seed: None,
                outputs: Vec::new(),
                started_unix_s,
                wall_clock_s: 0.0,
            },
        }
    }

    pub fn scenario_file(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.scenario_path = Some(path.to_path_buf());
        self.manifest.scenario_file_sha256 = Some(hex::encode(Sha256::digest(bytes)));
    }

    pub fn finish(mut self, out_dir: &Path) -> irs_radar::Result<PathBuf> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        let path = out_dir.join("manifest.json");
        irs_radar::io::write_json(&path, &self.manifest)?;
        Ok(path)
    }
}
