//! Run manifests: everything needed to reproduce an output directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Random generator used for every seeded draw.
    pub generator: String,
    pub command: Command,
    pub input: Option<InputRecord>,
    /// Output file name to SHA-256 of its contents (the manifest itself excluded).
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: Command) -> Self {
        Self {
            tool: "localcoh".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generator: localcoh::sampling::GENERATOR.into(),
            command,
            input: None,
            outputs: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    /// Hashes the listed files in `dir` and writes the manifest next to them.
    pub fn finish(mut self, dir: &Path, files: &[String]) -> Result<Self, CliError> {
        for name in files {
            self.outputs.insert(name.clone(), sha256_file(&dir.join(name))?);
        }
        write_json(&dir.join(MANIFEST_FILE), &self)?;
        Ok(self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
