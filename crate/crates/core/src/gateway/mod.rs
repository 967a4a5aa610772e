//! Chat-completion gateway: one request type over live HTTP dialects and
//! deterministic mock and oracle backends, with an on-disk response cache,
//! retries with jittered backoff and a shared rate limiter.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::ChatMessage;

mod cache;
mod http;
mod limiter;
mod mock;
mod oracle;

pub use cache::{CacheRecord, ResponseCache};
pub use http::{Dialect, HttpBackend, HttpConfig, HttpTransport, UreqTransport};
pub use limiter::{Clock, RateLimiter, SimClock, SystemClock};
pub use mock::MockBackend;
pub use oracle::OracleBackend;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub model_name: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub thinking: bool,
    #[serde(default)]
    pub thinking_budget: Option<u32>,
    /// Distinguishes otherwise identical best-of-N samples.
    #[serde(default)]
    pub sample_key: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt: u64,
    pub completion: u64,
    pub thinking: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    #[serde(default)]
    pub thinking_text: Option<String>,
    #[serde(default)]
    pub token_counts: TokenCounts,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default)]
    pub provider_meta: serde_json::Map<String, serde_json::Value>,
}

impl BackendResponse {
    pub fn text(text: impl Into<String>) -> Self {
        BackendResponse {
            text: text.into(),
            thinking_text: None,
            token_counts: TokenCounts::default(),
            latency_ms: 0,
            provider_meta: serde_json::Map::new(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("malformed provider reply: {0}")]
    MalformedProviderReply(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider rejected the request: {0}")]
    Rejected(String),
    #[error("backend `{0}` has no thinking mode")]
    ThinkingUnsupported(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache failure: {0}")]
    Cache(String),
}

impl GatewayError {
    /// Failures worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, GatewayError::RateLimited(_) | GatewayError::Timeout(_) | GatewayError::Transport(_))
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn supports_thinking(&self) -> bool;
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, GatewayError>;
}

/// Stable content hash of a request: SHA-256 over its JSON form with keys
/// in sorted order.
pub fn canonical_digest(req: &BackendRequest) -> String {
    json_digest(req)
}

/// SHA-256 hex of any serialisable value's canonical JSON.
pub fn json_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("value serialises");
    // serde_json maps are ordered by key, so this text is canonical
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 5, base_delay_ms: 1000, max_delay_ms: 60_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry `k` (0-based): base * 2^k, scaled by a random
    /// factor in [0.5, 1.0], capped.
    pub fn delay(&self, k: u32, rng: &mut impl Rng) -> Duration {
        let raw = self.base_delay_ms.saturating_mul(1u64 << k.min(20)).min(self.max_delay_ms);
        Duration::from_millis((raw as f64 * rng.gen_range(0.5..=1.0)) as u64)
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub requests: u64,
    pub cache_hits: u64,
    pub backend_calls: u64,
    pub retries: u64,
}

pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Option<Arc<ResponseCache>>,
    limiter: Option<Arc<RateLimiter>>,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
    requests: AtomicU64,
    cache_hits: AtomicU64,
    backend_calls: AtomicU64,
    retries: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Gateway {
            backend,
            cache: None,
            limiter: None,
            retry: RetryPolicy::default(),
            clock: Arc::new(SystemClock::new()),
            requests: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            backend_calls: AtomicU64::new(0),
            retries: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn supports_thinking(&self) -> bool {
        self.backend.supports_thinking()
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            retries: self.retries.load(Ordering::Relaxed),
        }
    }

    pub fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, GatewayError> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        if req.thinking_budget.is_some() && !req.thinking {
            return Err(GatewayError::InvalidRequest("thinking budget given with thinking disabled".into()));
        }
        if req.thinking && !self.backend.supports_thinking() {
            return Err(GatewayError::ThinkingUnsupported(self.backend.name().to_string()));
        }
        let digest = canonical_digest(req);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&digest)) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        let mut rng = rand::thread_rng();
        let mut attempt = 0;
        let response = loop {
            if let Some(l) = &self.limiter {
                l.acquire(self.clock.as_ref());
            }
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            match self.backend.call(req) {
                Ok(mut resp) => {
                    if !req.thinking {
                        resp.thinking_text = None;
                    }
                    break resp;
                }
                Err(e) if e.is_transient() && attempt + 1 < self.retry.attempts => {
                    let wait = self.retry.delay(attempt, &mut rng);
                    log::warn!("{} failed ({e}); retry {} in {wait:?}", self.backend.name(), attempt + 1);
                    self.retries.fetch_add(1, Ordering::Relaxed);
                    self.clock.sleep(wait);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if let Some(c) = &self.cache {
            c.insert(&digest, req, &response)?;
        }
        Ok(response)
    }
}
