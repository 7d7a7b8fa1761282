use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HashKind {
    /// SHA-256 of the file bytes.
    File,
    /// SHA-256 of the record content without its provenance block.
    RecordContent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub kind: HashKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRef {
    pub path: String,
    pub checksum: String,
}

/// Everything one output directory holds, keyed by experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub output_dir: String,
    pub runs: BTreeMap<String, ManifestRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub config_path: String,
    pub ball: Option<BallRef>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load_or_new(dir: &Path) -> std::io::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self {
                output_dir: dir.display().to_string(),
                runs: BTreeMap::new(),
            });
        }
        Self::load(dir)
    }

    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}
