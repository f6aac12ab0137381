//! The run manifest: what ran, with which seeds and settings, and the
//! SHA-256 of every file each stage read or wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::StageError;
use crate::seed::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KProvenance {
    /// Set by `cluster.k` or `--k`.
    Manual,
    /// Largest gap jump among the ranked candidates.
    JumpCandidate,
    /// One-standard-error rule, used when no jump stands out.
    OneStandardError,
    /// Neither rule produced a K; `k_min` is used.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenK {
    pub k: usize,
    pub provenance: KProvenance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// File name → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub config: PipelineConfig,
    pub stages: BTreeMap<String, StageRecord>,
    pub chosen_k: Option<ChosenK>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.seed,
            config: config.clone(),
            stages: BTreeMap::new(),
            chosen_k: None,
        }
    }

    /// Loads `dir/manifest.json` if present, refreshing the config snapshot;
    /// otherwise starts a new manifest.
    pub fn load_or_new(dir: &Path, config: &PipelineConfig) -> Result<Self, StageError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::new(config));
        }
        let text = fs::read_to_string(&path).map_err(|e| StageError::io(&path, e))?;
        let mut manifest: RunManifest = serde_json::from_str(&text)?;
        manifest.master_seed = config.seed;
        manifest.config = config.clone();
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, StageError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| StageError::io(&path, e))?;
        Ok(path)
    }

    /// Every recorded output digest, keyed `stage/file`.
    pub fn output_digests(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .flat_map(|(stage, r)| {
                r.outputs
                    .iter()
                    .map(move |(file, digest)| (format!("{stage}/{file}"), digest.clone()))
            })
            .collect()
    }

    /// Files whose current content no longer matches the recorded digest.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        let mut stale = Vec::new();
        for record in self.stages.values() {
            for (file, digest) in &record.outputs {
                match file_digest(&dir.join(file)) {
                    Ok(d) if &d == digest => {}
                    _ => stale.push(file.clone()),
                }
            }
        }
        stale
    }
}

pub fn file_digest(path: &Path) -> Result<String, StageError> {
    let bytes = fs::read(path).map_err(|e| StageError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}
