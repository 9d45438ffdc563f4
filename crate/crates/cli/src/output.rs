//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "QSL_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub job: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    /// Time step of the propagation grid, for optimization jobs.
    pub dt_ns: Option<f64>,
    /// Step-size parameters per field, for optimization jobs.
    pub lambda: Option<serde_json::Value>,
    pub wall_clock_s: f64,
    pub files: Vec<FileEntry>,
}

/// Single writer for one job's output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<PathBuf> {
        manifest.files = self.files.clone();
        self.write_json("manifest.json", &manifest)?;
        Ok(self.root.join("manifest.json"))
    }
}

/// Output directory precedence: command line, config, `QSL_OUT_DIR/<job>`,
/// then `qsl-out/<job>`.
pub fn resolve_output_dir(cli: Option<&Path>, config: Option<&Path>, job: &str) -> PathBuf {
    if let Some(p) = cli.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(job),
        _ => PathBuf::from("qsl-out").join(job),
    }
}
