use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Sidecar written next to a command's primary output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seeds: Vec<u64>,
    pub tool_version: &'static str,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Hashes `outputs` as they are on disk and writes the manifest beside the
/// first one.
pub fn write_manifest(outputs: &[&Path], seeds: Vec<u64>, started: Instant) -> Result<PathBuf> {
    let primary = outputs.first().context("manifest needs at least one output")?;
    let mut digests = Vec::new();
    for p in outputs {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        digests.push(OutputDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) });
    }
    let manifest = RunManifest {
        command_line: std::env::args().collect(),
        seeds,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: digests,
    };
    let path = manifest_path(primary);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
