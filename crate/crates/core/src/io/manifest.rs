use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Record of one CLI run, written next to its outputs as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    /// `None` when the built-in default configuration was used.
    pub config_path: Option<String>,
    /// SHA-256 of the raw config bytes.
    pub config_hash: String,
    pub profile: String,
    pub strategy: String,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(config_path: Option<&Path>, config_bytes: &[u8], profile: &str, strategy: &str) -> Self {
        RunManifest {
            config_path: config_path.map(|p| p.display().to_string()),
            config_hash: content_hash(config_bytes),
            profile: profile.to_string(),
            strategy: strategy.to_string(),
            warnings: Vec::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
