//! On-disk generation cache: an append-only JSON-Lines record log plus an
//! in-memory digest index, so interrupted runs resume without re-querying.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AttackError, GenerationRecord};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    cache_key: String,
    #[serde(flatten)]
    record: GenerationRecord,
}

/// Append-only generation cache. Writes are serialized behind a mutex;
/// lookups hit the in-memory index.
pub struct GenerationCache {
    path: PathBuf,
    inner: Mutex<CacheInner>,
}

struct CacheInner {
    index: HashMap<String, GenerationRecord>,
    file: std::fs::File,
}

impl GenerationCache {
    /// Opens (or creates) a cache log, loading any existing entries.
    pub fn open(path: &Path) -> Result<Self, AttackError> {
        let err = |message: String| AttackError::Cache(message);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| err(format!("create {}: {e}", parent.display())))?;
            }
        }
        let mut index = HashMap::new();
        if path.exists() {
            let content = std::fs::read_to_string(path)
                .map_err(|e| err(format!("read {}: {e}", path.display())))?;
            for (idx, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine = serde_json::from_str(line)
                    .map_err(|e| err(format!("{}:{}: {e}", path.display(), idx + 1)))?;
                index.insert(parsed.cache_key, parsed.record);
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| err(format!("open {}: {e}", path.display())))?;
        Ok(GenerationCache { path: path.to_path_buf(), inner: Mutex::new(CacheInner { index, file }) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cache hit returns the stored record flagged as cached.
    pub fn get(&self, key: &str) -> Option<GenerationRecord> {
        let inner = self.inner.lock().expect("cache lock");
        inner.index.get(key).map(|record| {
            let mut hit = record.clone();
            hit.cached = true;
            hit
        })
    }

    /// Appends a fresh record to the log and index.
    pub fn put(&self, key: &str, record: &GenerationRecord) -> Result<(), AttackError> {
        let line = serde_json::to_string(&CacheLine {
            cache_key: key.to_string(),
            record: record.clone(),
        })
        .expect("record serializes");
        let mut inner = self.inner.lock().expect("cache lock");
        writeln!(inner.file, "{line}")
            .map_err(|e| AttackError::Cache(format!("append {}: {e}", self.path.display())))?;
        inner.file.flush().map_err(|e| AttackError::Cache(e.to_string()))?;
        inner.index.insert(key.to_string(), record.clone());
        Ok(())
    }
}
