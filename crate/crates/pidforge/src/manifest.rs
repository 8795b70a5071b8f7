//! Corpus manifest: one JSON object per line, append-only. The manifest is
//! the durable record of every accepted plan and is what lets a generation
//! run resume without re-accepting near-duplicates.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dedup::DedupRegistry;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub schema_version: u32,
    pub plan_id: String,
    /// path of the rendered PNG, relative to the manifest's directory
    pub image_path: String,
    /// path of the graph annotation, relative to the manifest's directory
    pub annotation_path: String,
    /// id of the seed plan this sample was derived from
    pub seed_id: String,
    /// structural hash, 16 hex digits
    pub wl_hash: String,
    /// perceptual hash, 16 hex digits
    pub phash: String,
    /// zero-based generation attempt that produced this plan
    pub attempt: u64,
    /// RFC 3339 acceptance timestamp
    pub accepted_at: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest line {line}: bad {field} hash {value:?}")]
    BadHash { line: usize, field: &'static str, value: String },
}

fn io_err(path: &Path, source: std::io::Error) -> ManifestError {
    ManifestError::Io { path: path.display().to_string(), source }
}

pub fn append_entry(path: &Path, entry: &ManifestEntry) -> Result<(), ManifestError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let line = serde_json::to_string(entry).expect("manifest entry serializes");
    writeln!(f, "{line}").map_err(|e| io_err(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| ManifestError::Parse { line: i + 1, message: e.to_string() })?;
        out.push(entry);
    }
    Ok(out)
}

/// Re-register previously accepted hashes so a resumed run keeps rejecting
/// duplicates of existing corpus members.
pub fn seed_registry(
    entries: &[ManifestEntry],
    registry: &mut DedupRegistry,
) -> Result<(), ManifestError> {
    for (i, e) in entries.iter().enumerate() {
        let wl = u64::from_str_radix(&e.wl_hash, 16).map_err(|_| ManifestError::BadHash {
            line: i + 1,
            field: "wl",
            value: e.wl_hash.clone(),
        })?;
        let ph = u64::from_str_radix(&e.phash, 16).map_err(|_| ManifestError::BadHash {
            line: i + 1,
            field: "phash",
            value: e.phash.clone(),
        })?;
        registry.register(wl, ph);
    }
    Ok(())
}
