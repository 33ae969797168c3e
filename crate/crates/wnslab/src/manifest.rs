//! Run manifest: what produced a set of artifacts, with content digests.
//!
//! The manifest ties outputs to the exact configuration, tool version, and
//! worker count that made them. Artifact lines carry SHA-256 digests, so two
//! runs can be compared for bit-identical outputs by comparing those lines
//! alone (wall time naturally differs between runs).

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::par;

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

/// Provenance record for one run.
#[derive(Clone, Debug)]
pub struct Manifest {
    /// Crate version that produced the artifacts.
    pub version: String,
    /// Worker threads the run used.
    pub workers: usize,
    /// Wall-clock duration of the run in seconds.
    pub wall_seconds: f64,
    /// Exact configuration text the run used.
    pub config: String,
    /// `(file name, sha256)` per artifact, in the order they were added.
    pub artifacts: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(config_text: impl Into<String>) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            workers: par::worker_count(),
            wall_seconds: 0.0,
            config: config_text.into(),
            artifacts: Vec::new(),
        }
    }

    /// Digests `path` and records it under its file name.
    pub fn add_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let digest = sha256_file(path)?;
        self.artifacts.push((name, digest));
        Ok(())
    }

    /// Text form: header lines, one `artifact` line per output, then the
    /// config indented under `config:`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "wnslab-manifest v1").unwrap();
        writeln!(out, "version {}", self.version).unwrap();
        writeln!(out, "workers {}", self.workers).unwrap();
        writeln!(out, "wall_seconds {:.3}", self.wall_seconds).unwrap();
        for (name, digest) in &self.artifacts {
            writeln!(out, "artifact {name} sha256 {digest}").unwrap();
        }
        writeln!(out, "config:").unwrap();
        for line in self.config.lines() {
            writeln!(out, "    {line}").unwrap();
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}
