//! Append-only response cache keyed by request digest.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::LlmError;

use super::LlmParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub digest: String,
    pub prompt: String,
    pub params: LlmParams,
    pub completion: String,
    pub timestamp: String,
}

/// In-memory map backed, optionally, by a JSON-lines file.
pub struct ResponseCache {
    entries: Mutex<HashMap<String, String>>,
    file: Mutex<Option<File>>,
    path: Option<PathBuf>,
    hits: AtomicUsize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            entries: Mutex::new(HashMap::new()),
            file: Mutex::new(Option::None),
            path: Option::None,
            hits: AtomicUsize::new(0),
        }
    }

    /// Loads existing records and appends new ones to the same file.
    /// Unreadable lines are skipped with a warning; later records win.
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(err)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(r) => {
                        entries.insert(r.digest, r.completion);
                    }
                    Err(e) => {
                        log::warn!("{}:{}: skipping cache record: {e}", path.display(), i + 1)
                    }
                }
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(err)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(err)?;
        Ok(ResponseCache {
            entries: Mutex::new(entries),
            file: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        let found = self.entries.lock().unwrap().get(digest).cloned();
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        found
    }

    pub fn insert(&self, record: CacheRecord) -> Result<(), LlmError> {
        let mut file = self.file.lock().unwrap();
        if let Some(f) = file.as_mut() {
            let line =
                serde_json::to_string(&record).map_err(|e| LlmError::Cache(e.to_string()))?;
            writeln!(f, "{line}")
                .and_then(|_| f.flush())
                .map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        self.entries
            .lock()
            .unwrap()
            .insert(record.digest, record.completion);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}
