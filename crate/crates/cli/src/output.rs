use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sidecar written next to every output as `<file>.meta.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub tool_version: String,
    pub stage: String,
    pub stage_version: u32,
    pub config_hash: String,
    pub input_hash: String,
    pub cache_key: String,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().expect("output file name").to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().expect("output file name").to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Whether `path` exists with a sidecar carrying `cache_key`.
pub fn is_fresh(path: &Path, cache_key: &str) -> bool {
    path.exists()
        && fs::read_to_string(meta_path(path))
            .ok()
            .and_then(|t| serde_json::from_str::<OutputMeta>(&t).ok())
            .is_some_and(|m| m.cache_key == cache_key && m.tool_version == TOOL_VERSION)
}

/// Writes through `<file>.partial` and renames on success, so an
/// interrupted stage leaves only `.partial` files behind.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = partial_path(path);
    let file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().with_context(|| format!("writing {}", tmp.display()))?;
    drop(w);
    fs::rename(&tmp, path).with_context(|| format!("renaming {}", tmp.display()))?;
    Ok(())
}

pub fn write_with_meta(
    path: &Path,
    meta: &OutputMeta,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    // The sidecar goes last: a stale sidecar never vouches for new data.
    let _ = fs::remove_file(meta_path(path));
    write_atomic(path, body)?;
    write_atomic(&meta_path(path), |w| {
        serde_json::to_writer_pretty(&mut *w, meta)?;
        writeln!(w)?;
        Ok(())
    })
}
