use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{BackendRequest, BackendResponse, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub digest: String,
    pub request: BackendRequest,
    pub response: BackendResponse,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Append-only JSON-lines response cache. Reads go through an in-memory
/// index; all appends share one writer.
pub struct ResponseCache {
    path: PathBuf,
    index: RwLock<HashMap<String, BackendResponse>>,
    writer: Mutex<BufWriter<File>>,
    skipped: usize,
}

impl ResponseCache {
    /// Opens or creates the cache at `path`. Unreadable lines are skipped
    /// with a warning.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let io = |e: std::io::Error| GatewayError::Cache(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut index = HashMap::new();
        let mut skipped = 0;
        if path.exists() {
            for (no, line) in BufReader::new(File::open(path).map_err(io)?).lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        index.insert(rec.digest, rec.response);
                    }
                    Err(e) => {
                        skipped += 1;
                        log::warn!("{}:{}: skipping unreadable cache entry: {e}", path.display(), no + 1);
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(ResponseCache {
            path: path.to_path_buf(),
            index: RwLock::new(index),
            writer: Mutex::new(BufWriter::new(file)),
            skipped,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lines dropped as unreadable when the cache was opened.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn get(&self, digest: &str) -> Option<BackendResponse> {
        self.index.read().expect("cache lock").get(digest).cloned()
    }

    pub fn insert(&self, digest: &str, request: &BackendRequest, response: &BackendResponse) -> Result<(), GatewayError> {
        let record = CacheRecord {
            digest: digest.to_string(),
            request: request.clone(),
            response: response.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let line = serde_json::to_string(&record).map_err(|e| GatewayError::Cache(e.to_string()))?;
        {
            let mut w = self.writer.lock().expect("cache writer lock");
            writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        self.index.write().expect("cache lock").insert(record.digest, record.response);
        Ok(())
    }
}
