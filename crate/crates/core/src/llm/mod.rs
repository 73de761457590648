//! Chat-completion backends.
//!
//! Everything above this module talks to a [`ChatBackend`]. Three
//! implementations ship with the crate:
//!
//! * [`HttpBackend`] posts to any OpenAI-compatible `chat/completions` endpoint,
//!   with bounded retries and an in-flight request cap.
//! * [`ScriptedBackend`] answers from a list of substring rules; it is a pure
//!   function of the request and drives all deterministic tests.
//! * [`CachedBackend`] records responses to disk keyed by [`cache_key`] and
//!   replays them, so a recorded run can be repeated byte for byte.

mod cache;
mod http;
mod retry;
mod scripted;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheMode, CachedBackend, RecordEntry};
pub use http::{HttpBackend, HttpConfig};
pub use retry::RetryPolicy;
pub use scripted::{ScriptRule, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Distinguishes repeated sampling runs of the same prompt.
    pub vote_index: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), String> {
        match self.messages.last() {
            None => return Err("no messages".into()),
            Some(m) if m.role != Role::User => return Err("last message must be from the user".into()),
            _ => {}
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        Ok(())
    }

    /// Concatenated message contents, used for script matching.
    pub fn transcript(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseSource {
    Live,
    Replay,
    Scripted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub truncated: bool,
    pub latency: Duration,
    pub source: ResponseSource,
}

/// SHA-256 digest identifying a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(pub [u8; 32]);

impl CacheKey {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Digest of everything that determines a completion, including `vote_index`.
pub fn cache_key(r: &ChatRequest) -> CacheKey {
    // Field order is fixed by the struct definition; serde_json prints floats
    // in shortest round-trip form, so the encoding is canonical.
    let canonical = serde_json::to_vec(r).expect("request serializes");
    let mut h = Sha256::new();
    h.update(b"chat-request/v1\n");
    h.update(&canonical);
    CacheKey(h.finalize().into())
}

#[derive(Debug, Error)]
#[error("request {request_id}: {kind}")]
pub struct LlmError {
    /// Hex cache key of the failed request.
    pub request_id: String,
    pub kind: LlmErrorKind,
}

impl LlmError {
    pub fn new(req: &ChatRequest, kind: LlmErrorKind) -> Self {
        LlmError {
            request_id: cache_key(req).hex(),
            kind,
        }
    }

    pub fn is_transient(&self) -> bool {
        matches!(self.kind, LlmErrorKind::Timeout | LlmErrorKind::RateLimited { .. })
            || matches!(self.kind, LlmErrorKind::Http { status, .. } if status >= 500)
    }
}

#[derive(Debug, Error)]
pub enum LlmErrorKind {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("network failure: {0}")]
    Network(String),
    #[error("timed out")]
    Timeout,
    #[error("rate limited (gave up after {attempts} attempts)")]
    RateLimited { attempts: u32 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("API key variable {0} is not set")]
    MissingApiKey(String),
    #[error("no script rule matches the request")]
    ScriptMiss,
    #[error("no recorded response (replay-only cache)")]
    ReplayMiss,
    #[error("cache store: {0}")]
    Cache(String),
    #[error("{0}")]
    Other(String),
}

/// A chat-completion provider. Implementations must be callable from many threads.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;

    /// Short description recorded in run manifests.
    fn describe(&self) -> String {
        "custom".to_string()
    }
}

/// Adapts a closure into a backend.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse, LlmError> + Send + Sync,
{
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (self.0)(req)
    }

    fn describe(&self) -> String {
        "fn".to_string()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Counting semaphore capping concurrent work.
#[derive(Debug)]
pub struct Semaphore {
    permits: std::sync::Mutex<usize>,
    cv: std::sync::Condvar,
}

pub struct SemaphoreGuard<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            permits: std::sync::Mutex::new(permits.max(1)),
            cv: std::sync::Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut n = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        SemaphoreGuard(self)
    }
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.permits.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.cv.notify_one();
    }
}
