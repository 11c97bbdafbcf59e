use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

use super::config::{Command, RunConfig};

/// Streams derived from the master seed, listed in every manifest.
pub const SEEDED_MODULES: [&str; 7] = [
    "sim-world",
    "lidar-sensor",
    "mission-planner",
    "neural-core",
    "rl-agent",
    "replay-buffer",
    "evaluation",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    /// Hex sha256 of the file contents.
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }

    /// True if the file on disk still has this digest.
    pub fn matches(&self) -> bool {
        FileDigest::of(&self.path).map(|d| d == *self).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub seed: u64,
    pub derived_seeds: BTreeMap<String, u64>,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    pub started_unix_ms: u64,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Collects inputs and artifacts while a command runs.
pub(crate) struct ManifestBuilder {
    command: Command,
    config: RunConfig,
    inputs: Vec<FileDigest>,
    artifacts: Vec<FileDigest>,
    started: SystemTime,
    clock: Instant,
}

impl ManifestBuilder {
    pub fn start(command: Command, config: &RunConfig) -> Self {
        Self {
            command,
            config: config.clone(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn artifact(&mut self, path: &Path) -> Result<()> {
        self.artifacts.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Write `manifest.json` into the output directory.
    pub fn finish(self) -> Result<RunManifest> {
        let seed = self.config.seed;
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            derived_seeds: SEEDED_MODULES
                .iter()
                .map(|m| (m.to_string(), derive_seed(seed, m)))
                .collect(),
            inputs: self.inputs,
            artifacts: self.artifacts,
            started_unix_ms: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            wall_seconds: self.clock.elapsed().as_secs_f64(),
            config: self.config,
        };
        let path = manifest.config.out("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
