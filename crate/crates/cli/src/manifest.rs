use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use veriscope_core::learn::MODEL_FORMAT_VERSION;

use crate::error::{runtime, Result};
use crate::table::{read_json, write_json};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub wall_seconds: f64,
    /// Output path relative to the output directory -> SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_versions: BTreeMap<String, u32>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            artifact_versions: BTreeMap::from([
                ("manifest".to_string(), MANIFEST_VERSION),
                ("model".to_string(), MODEL_FORMAT_VERSION),
            ]),
            stages: BTreeMap::new(),
        }
    }

    /// The existing manifest if it was written under the same config,
    /// otherwise a fresh one.
    pub fn load_or_new(dir: &Path, config_hash: &str) -> Result<Self> {
        let path = dir.join(MANIFEST);
        if path.is_file() {
            let m: Self = read_json(&path)?;
            if m.config_hash == config_hash {
                return Ok(m);
            }
        }
        Ok(Self::new(config_hash.to_string()))
    }

    pub fn record(&mut self, dir: &Path, stage: &str, wall_seconds: f64, outputs: &[String]) -> Result<()> {
        let mut digests = BTreeMap::new();
        for rel in outputs {
            digests.insert(rel.clone(), sha256_file(&dir.join(rel))?);
        }
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                wall_seconds,
                outputs: digests,
            },
        );
        write_json(&dir.join(MANIFEST), self)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(runtime)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
