use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to re-run a command. Deliberately has no timestamps
/// so that re-runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Input path to hex SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub tool: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, parameters: &P) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters)?,
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs
            .insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn write_sidecar(&mut self, out: &Path) -> Result<PathBuf> {
        let path = sidecar_path(out, "manifest.json");
        if self.outputs.is_empty() {
            self.outputs.push(out.display().to_string());
        }
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `out.csv` -> `out.csv.<suffix>`.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
