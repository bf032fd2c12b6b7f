//! Content-addressed JSON cache and atomic file writes.

use crate::error::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

pub const ENV_DIR: &str = "RBL_CACHE_DIR";

/// SHA-256 of the canonical JSON encoding of `v`, hex encoded.
pub fn content_key<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("cache keys serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes via a uniquely named sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_csv_atomic<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    write_atomic(path, &bytes)
}

#[derive(Clone, Debug)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    /// Root from `RBL_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(ENV_DIR).map(Self::new)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.json"))
    }

    pub fn lookup<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let p = self.path(key);
        let text = fs::read(&p).ok()?;
        match serde_json::from_slice::<Stored<T>>(&text) {
            Ok(s) if s.key == key => Some(s.record),
            Ok(_) => {
                log::warn!("cache record {} has a mismatched key; ignoring", p.display());
                None
            }
            Err(e) => {
                log::warn!("corrupted cache record {}: {e}", p.display());
                None
            }
        }
    }

    pub fn store<T: Serialize>(&self, key: &str, record: &T) -> Result<()> {
        let bytes = serde_json::to_vec(&Stored { key: key.to_string(), record })?;
        write_atomic(&self.path(key), &bytes)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Stored<T> {
    key: String,
    record: T,
}
