use std::collections::BTreeSet;
use std::path::{Component, Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::BenchConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: BenchConfig,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that refuses paths escaping it and remembers every
/// artifact written for the manifest.
pub struct OutDir {
    root: PathBuf,
    written: BTreeSet<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: BTreeSet::new(),
        })
    }

    /// Absolute path for `rel`, parents created. `rel` must stay inside the
    /// directory.
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let r = Path::new(rel);
        if rel.is_empty() || !r.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(CliError::Usage(format!(
                "output path {rel:?} escapes the output directory"
            )));
        }
        let p = self.root.join(r);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        Ok(p)
    }

    /// Marks a file written through [`OutDir::path`] as an artifact.
    pub fn record(&mut self, rel: &str) {
        self.written.insert(rel.to_string());
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(rel)?;
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        self.record(rel);
        Ok(p)
    }

    /// Writes a file that is not part of the reproducible artifact set.
    pub fn write_untracked(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(rel)?;
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Hashes every recorded artifact and writes `manifest.json`.
    pub fn finish(self, command: &str, config: &BenchConfig) -> Result<Manifest> {
        let mut artifacts = Vec::with_capacity(self.written.len());
        for rel in &self.written {
            let p = self.root.join(rel);
            let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            artifacts.push(Artifact {
                path: rel.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let m = Manifest {
            tool: "mapbench",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: config.seed,
            config: config.snapshot(),
            artifacts,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        let p = self.root.join(MANIFEST);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(m)
    }
}
