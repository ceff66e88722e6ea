//! Output plumbing: atomic file writes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Write bytes to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Provenance record written next to every command's outputs. Re-running the
/// recorded command line with this tool version reproduces the outputs
/// byte-for-byte.
#[derive(Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: C,
    pub outputs: Vec<PathBuf>,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(seed: Option<u64>, config: C, outputs: Vec<PathBuf>) -> Self {
        Manifest {
            tool: "lapreg",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            seed,
            config,
            outputs,
        }
    }

    /// Write as `<primary>.manifest.json`.
    pub fn write(&self, primary: &Path) -> std::io::Result<PathBuf> {
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = primary.with_file_name(name);
        write_json_atomic(&path, self)?;
        Ok(path)
    }
}
