//! Run manifests with content-hash naming and idempotent report emission.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub toolkit_version: String,
    pub content_hash: String,
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>, params: serde_json::Value, seed: u64) -> Self {
        let subcommand = subcommand.into();
        let hash = content_hash(&serde_json::json!({
            "subcommand": subcommand,
            "params": params,
            "seed": seed,
            "toolkit_version": TOOLKIT_VERSION,
        }));
        RunManifest {
            subcommand,
            params,
            seed,
            toolkit_version: TOOLKIT_VERSION.into(),
            content_hash: hash,
        }
    }

    /// Directory name derived from the hash.
    pub fn dir_name(&self) -> String {
        self.content_hash[..12].to_string()
    }
}

/// JSON with recursively sorted object keys, so hashing is order-independent.
pub fn canonical_json(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let inner: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", serde_json::to_string(k).unwrap(), canonical_json(&map[*k])))
                .collect();
            format!("{{{}}}", inner.join(","))
        }
        serde_json::Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(canonical_json).collect();
            format!("[{}]", inner.join(","))
        }
        other => serde_json::to_string(other).unwrap(),
    }
}

pub fn content_hash(v: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_json(v).as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes the manifest and the named files into `out_dir/<hash12>/`.
/// Re-emission of the same report produces identical bytes in the same place.
pub fn emit_report(
    out_dir: &Path,
    manifest: &RunManifest,
    files: &[(&str, String)],
) -> Result<PathBuf> {
    let dir = out_dir.join(manifest.dir_name());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(manifest)?)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(dir)
}

/// Hash of every file in a directory tree, for bit-for-bit reproducibility
/// checks.
pub fn tree_hash(dir: &Path) -> Result<String> {
    let mut entries = vec![];
    collect(dir, dir, &mut entries)?;
    entries.sort();
    let mut hasher = Sha256::new();
    for (rel, bytes) in entries {
        hasher.update(rel.as_bytes());
        hasher.update(bytes);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) -> Result<()> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = entry.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).unwrap().display().to_string();
            let bytes = std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            out.push((rel, bytes));
        }
    }
    Ok(())
}
