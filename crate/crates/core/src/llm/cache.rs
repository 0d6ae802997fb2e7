use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LlmError, LlmExchange};

/// Hex SHA-256 of `(model, temperature, rendered prompt)`.
pub fn cache_key(model: &str, temperature: f64, rendered: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0]);
    h.update(temperature.to_bits().to_le_bytes());
    h.update([0]);
    h.update(rendered.as_bytes());
    hex::encode(h.finalize())
}

/// Directory of JSON exchange records named `<cache_key>.json`.
///
/// Writes go through a temporary file and a rename so concurrent readers
/// never observe a partial record; a lock serializes writers within the
/// process.
#[derive(Debug)]
pub struct ExchangeCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub key: String,
    pub provider: String,
    pub model: String,
    pub kind: String,
    pub valid: bool,
    pub latency_seconds: f64,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn cache_err(path: &Path, e: impl std::fmt::Display) -> LlmError {
    LlmError::Cache {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl ExchangeCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| cache_err(&dir, e))?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<LlmExchange>, LlmError> {
        let path = self.path_for(key);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let mut ex: LlmExchange = serde_json::from_str(&text).map_err(|e| cache_err(&path, e))?;
                ex.from_cache = true;
                Ok(Some(ex))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(cache_err(&path, e)),
        }
    }

    pub fn put(&self, exchange: &LlmExchange) -> Result<(), LlmError> {
        let path = self.path_for(&exchange.cache_key);
        let text = serde_json::to_string_pretty(exchange).map_err(|e| cache_err(&path, e))?;
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            exchange.cache_key,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, text).map_err(|e| cache_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| cache_err(&path, e))
    }

    fn record_paths(&self) -> Result<Vec<PathBuf>, LlmError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(|e| cache_err(&self.dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| !n.starts_with('.'))
            })
            .collect();
        paths.sort();
        Ok(paths)
    }

    /// Summaries of every record, sorted by key.
    pub fn list(&self) -> Result<Vec<CacheSummary>, LlmError> {
        self.record_paths()?
            .into_iter()
            .map(|path| {
                let text = fs::read_to_string(&path).map_err(|e| cache_err(&path, e))?;
                let ex: LlmExchange = serde_json::from_str(&text).map_err(|e| cache_err(&path, e))?;
                Ok(CacheSummary {
                    key: ex.cache_key,
                    provider: ex.provider,
                    model: ex.model,
                    kind: ex.prompt.kind.name().to_string(),
                    valid: ex.valid,
                    latency_seconds: ex.latency_seconds,
                })
            })
            .collect()
    }

    /// Deletes every record and returns how many were removed.
    pub fn clear(&self) -> Result<usize, LlmError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let paths = self.record_paths()?;
        for p in &paths {
            fs::remove_file(p).map_err(|e| cache_err(p, e))?;
        }
        Ok(paths.len())
    }
}
