//! Every run drops a manifest next to its outputs: the command, the full
//! argument vector, seeds, the crate version, wall time, and a SHA-256
//! digest of each output file. Re-running a command reproduces the outputs
//! byte for byte; only the wall-time field varies.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub version: String,
    pub wall_time_ms: f64,
    pub outputs: BTreeMap<String, String>,
}

pub struct ManifestBuilder {
    command: String,
    seeds: BTreeMap<String, u64>,
    outputs: Vec<PathBuf>,
    started: std::time::Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
            started: std::time::Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<dir>/manifest.json` when `at` is a directory, otherwise
    /// `<at>.manifest.json`.
    pub fn write(self, at: &Path) -> std::io::Result<PathBuf> {
        let mut outputs = BTreeMap::new();
        for path in &self.outputs {
            let bytes = std::fs::read(path)?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            outputs.insert(path.display().to_string(), hex);
        }
        let manifest = RunManifest {
            command: self.command,
            args: std::env::args().collect(),
            seeds: self.seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
            outputs,
        };
        let target = if at.is_dir() {
            at.join("manifest.json")
        } else {
            let mut name = at.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            at.with_file_name(name)
        };
        std::fs::write(
            &target,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;
        Ok(target)
    }
}
