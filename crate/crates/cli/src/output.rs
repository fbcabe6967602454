//! Artifact writing: CSV/JSON payloads plus a provenance sidecar per
//! output file. Everything written here is a pure function of the config
//! and seed, so repeated runs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => anyhow::bail!("unknown format `{other}` (expected csv, json or both)"),
        }
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Provenance embedded next to every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub reps: u64,
    pub version: String,
    pub artifact: String,
}

pub struct OutputWriter {
    dir: PathBuf,
    command: String,
    config_sha256: String,
    seed: u64,
    reps: u64,
    pub written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path, command: &str, config_sha256: String, seed: u64, reps: u64) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_sha256,
            seed,
            reps,
            written: Vec::new(),
        })
    }

    fn sidecar(&self, artifact: &str) -> Provenance {
        Provenance {
            command: self.command.clone(),
            config_sha256: self.config_sha256.clone(),
            seed: self.seed,
            reps: self.reps,
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifact: artifact.to_string(),
        }
    }

    pub fn write_text(&mut self, name: &str, payload: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, payload).with_context(|| format!("cannot write {}", path.display()))?;
        let side = self.dir.join(format!("{name}.provenance.json"));
        let prov = serde_json::to_string_pretty(&self.sidecar(name))?;
        fs::write(&side, prov).with_context(|| format!("cannot write {}", side.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let payload = serde_json::to_string_pretty(value)?;
        self.write_text(name, &payload)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
