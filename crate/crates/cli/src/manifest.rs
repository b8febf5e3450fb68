//! Output writer and the run manifest that indexes every file it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qbm_core::io::CsvTable;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// A diagnostic with a declared pass limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            limit,
            passed: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub key: String,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub sweep: Option<SweepPoint>,
    pub elapsed_seconds: f64,
    pub diagnostics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Solver-specific record (step history, grids, flags), if any.
    pub solver: Option<serde_json::Value>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Writes files under one run directory and records their digests.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &CsvTable) -> Result<(), CliError> {
        self.write_bytes(name, table.to_string_lossy().as_bytes())
    }

    /// Writes `manifest.json` (not listed in its own index).
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
        manifest.files = self.files;
        let text = serde_json::to_string_pretty(&manifest).expect("a manifest always serializes");
        let path = self.root.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }
}
