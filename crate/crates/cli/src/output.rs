//! Run manifests, input digests and all-or-nothing output writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "chartsum";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_bytes(path: &Path, data: &[u8]) -> FileDigest {
    FileDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(data)), bytes: data.len() as u64 }
}

/// Digests a file, or every regular file directly inside a directory in
/// name order.
pub fn digest_input(path: &Path) -> Result<Vec<FileDigest>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("{}: cannot list directory", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        return files.iter().map(|f| digest_file(f)).collect();
    }
    Ok(vec![digest_file(path)?])
}

fn digest_file(path: &Path) -> Result<FileDigest> {
    let data = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(digest_bytes(path, &data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// Wall-clock data. The only part of a manifest that differs between two
/// otherwise identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: Option<Value>,
    pub timing: Timing,
}

pub struct Clock {
    started: SystemTime,
    instant: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Clock { started: SystemTime::now(), instant: Instant::now() }
    }

    pub fn timing(&self) -> Timing {
        Timing {
            started_unix_ms: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
            wall_ms: self.instant.elapsed().as_millis(),
        }
    }
}

/// Output files are staged in memory and only written once the whole run
/// has succeeded.
#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, data: Vec<u8>) {
        self.files.push((path.to_path_buf(), data));
    }

    pub fn jsonl<T: Serialize>(&mut self, path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
        let mut buf = Vec::new();
        for item in items {
            serde_json::to_writer(&mut buf, &item)?;
            buf.push(b'\n');
        }
        self.add(path, buf);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.add(path, buf);
        Ok(())
    }

    pub fn digests(&self) -> Vec<FileDigest> {
        self.files.iter().map(|(p, d)| digest_bytes(p, d)).collect()
    }

    /// Writes every staged file through a temporary file in its target
    /// directory and renames it into place.
    pub fn commit(self) -> Result<()> {
        for (path, data) in self.files {
            write_atomic(&path, &data)?;
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("{}: cannot stage output", dir.display()))?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("{}: cannot write", path.display()))?;
    Ok(())
}

/// `clean.jsonl` gets `clean.manifest.json` beside it.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}
