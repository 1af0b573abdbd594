//! Run manifests and the output directory that feeds them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fingerloc::digest::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Input role (`labelled`, `layout`, ...) or artifact file name.
    pub name: String,
    /// Absolute input path; `None` for the built-in layout and for
    /// artifacts, which live next to the manifest.
    pub path: Option<PathBuf>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Fully resolved: flags applied, paths absolute.
    pub config: Config,
    /// Every seed the run derived from `config.seed`, by label.
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    pub started_at: String,
    pub elapsed_secs: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn artifact(&self, name: &str) -> Option<&FileDigest> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Collects what a command reads and writes.
#[derive(Debug)]
pub struct RunRecord {
    dir: PathBuf,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
}

impl RunRecord {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
        Ok(Self { dir: dir.to_owned(), seeds: BTreeMap::new(), inputs: Vec::new(), artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&mut self, label: &str, value: u64) -> u64 {
        self.seeds.insert(label.to_owned(), value);
        value
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        self.inputs.push(FileDigest { name: role.to_owned(), path: Some(path.to_owned()), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn builtin_input(&mut self, role: &str, bytes: &[u8]) {
        self.inputs.push(FileDigest { name: role.to_owned(), path: None, sha256: sha256_hex(bytes) });
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?;
        self.artifacts.retain(|a| a.name != name);
        self.artifacts.push(FileDigest { name: name.to_owned(), path: None, sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, command: &str, config: Config, started: chrono::DateTime<chrono::Utc>) -> Result<RunManifest> {
        let elapsed = (chrono::Utc::now() - started).num_microseconds().unwrap_or(0) as f64 / 1e6;
        let manifest = RunManifest {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            seeds: self.seeds,
            inputs: self.inputs,
            artifacts: self.artifacts,
            started_at: started.to_rfc3339(),
            elapsed_secs: elapsed,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|source| CliError::Write { path, source })?;
        Ok(manifest)
    }
}
