use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{cache_key, ChatBackend, ChatRequest, ChatResponse, LlmError, LlmErrorKind, ResponseSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheMode {
    /// Replay hits, forward misses to the inner backend and record them.
    ReadWrite,
    /// Replay hits, fail on misses.
    ReplayOnly,
}

/// On-disk record: one JSON file per cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub key: String,
    pub request: ChatRequest,
    pub text: String,
    pub truncated: bool,
    pub recorded_from: ResponseSource,
}

/// Record/replay wrapper around another backend.
pub struct CachedBackend {
    inner: Option<Box<dyn ChatBackend>>,
    dir: PathBuf,
    mode: CacheMode,
    write_lock: Mutex<()>,
    forwarded: AtomicUsize,
}

impl CachedBackend {
    pub fn new(inner: Box<dyn ChatBackend>, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        Self::build(Some(inner), dir.into(), CacheMode::ReadWrite)
    }

    pub fn replay_only(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        Self::build(None, dir.into(), CacheMode::ReplayOnly)
    }

    fn build(inner: Option<Box<dyn ChatBackend>>, dir: PathBuf, mode: CacheMode) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(CachedBackend {
            inner,
            dir,
            mode,
            write_lock: Mutex::new(()),
            forwarded: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Number of requests forwarded to the inner backend so far.
    pub fn forwarded_calls(&self) -> usize {
        self.forwarded.load(Ordering::SeqCst)
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn read_entry(&self, path: &Path) -> Result<Option<RecordEntry>, String> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| format!("{}: {e}", path.display())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(format!("{}: {e}", path.display())),
        }
    }

    fn replayed(entry: RecordEntry) -> ChatResponse {
        ChatResponse {
            text: entry.text,
            truncated: entry.truncated,
            latency: Duration::ZERO,
            source: ResponseSource::Replay,
        }
    }
}

impl ChatBackend for CachedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let key = cache_key(req).hex();
        let path = self.entry_path(&key);
        let cache_err = |m: String| LlmError::new(req, LlmErrorKind::Cache(m));
        if let Some(entry) = self.read_entry(&path).map_err(cache_err)? {
            return Ok(Self::replayed(entry));
        }
        let inner = match (&self.inner, self.mode) {
            (Some(inner), CacheMode::ReadWrite) => inner,
            _ => return Err(LlmError::new(req, LlmErrorKind::ReplayMiss)),
        };
        self.forwarded.fetch_add(1, Ordering::SeqCst);
        let resp = inner.complete(req)?;

        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        // Another worker may have recorded the same key meanwhile; keep the first.
        if let Some(entry) = self.read_entry(&path).map_err(cache_err)? {
            return Ok(Self::replayed(entry));
        }
        let entry = RecordEntry {
            key: key.clone(),
            request: req.clone(),
            text: resp.text.clone(),
            truncated: resp.truncated,
            recorded_from: resp.source,
        };
        let json = serde_json::to_string_pretty(&entry).expect("entry serializes");
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, json)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| cache_err(format!("{}: {e}", path.display())))?;
        Ok(resp)
    }

    fn describe(&self) -> String {
        match &self.inner {
            Some(inner) => format!("cached({}, {})", inner.describe(), self.dir.display()),
            None => format!("replay({})", self.dir.display()),
        }
    }
}
