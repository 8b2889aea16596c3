use std::collections::HashMap;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::ModelRole;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self { role: role.to_string(), content: content.into() }
    }
}

/// Body of `POST {base}/v1/chat/completions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub response_format: Value,
}

impl ChatRequest {
    /// Cache key: SHA-256 over the case scope, the endpoint and the
    /// serialized request.
    pub fn key(&self, scope: &str, endpoint: &str) -> String {
        let mut h = Sha256::new();
        for part in [scope, endpoint] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        h.update(serde_json::to_vec(self).expect("request serializes"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Name of the requested output schema, if any.
    pub fn schema_name(&self) -> Option<&str> {
        self.response_format.pointer("/json_schema/name").and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            BackendError::Protocol(_) => false,
        }
    }
}

/// Something that answers chat-completion requests with the assistant text.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, role: &ModelRole, request: &ChatRequest) -> Result<String, BackendError>;
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// OpenAI-compatible HTTP backend.
///
/// The bearer token comes from `REFWHY_API_KEY_<ROLE>` or else
/// `REFWHY_API_KEY`; without either no `Authorization` header is sent.
pub struct HttpBackend {
    in_flight: Semaphore,
    min_interval: Duration,
    last_start: Mutex<HashMap<String, Instant>>,
}

impl HttpBackend {
    pub fn new(max_in_flight: usize, min_interval: Duration) -> Self {
        Self {
            in_flight: Semaphore { free: Mutex::new(max_in_flight.max(1)), cv: Condvar::new() },
            min_interval,
            last_start: Mutex::new(HashMap::new()),
        }
    }

    fn api_key(role: &ModelRole) -> Option<String> {
        std::env::var(format!("REFWHY_API_KEY_{}", role.role.name()))
            .or_else(|_| std::env::var("REFWHY_API_KEY"))
            .ok()
            .filter(|k| !k.is_empty())
    }

    /// Spaces request starts per endpoint by at least `min_interval`.
    fn pace(&self, endpoint: &str) {
        if self.min_interval.is_zero() {
            return;
        }
        let wait = {
            let mut last = self.last_start.lock().unwrap();
            let now = Instant::now();
            let next = last.get(endpoint).map_or(now, |t| (*t + self.min_interval).max(now));
            last.insert(endpoint.to_string(), next);
            next - now
        };
        std::thread::sleep(wait);
    }
}

impl Default for HttpBackend {
    fn default() -> Self {
        Self::new(4, Duration::ZERO)
    }
}

pub fn completions_url(endpoint: &str) -> String {
    format!("{}/v1/chat/completions", endpoint.trim_end_matches('/'))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, role: &ModelRole, request: &ChatRequest) -> Result<String, BackendError> {
        let _slot = self.in_flight.acquire();
        self.pace(&role.endpoint);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(role.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&completions_url(&role.endpoint));
        if let Some(key) = Self::api_key(role) {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(request).map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body });
        }
        let v: Value = serde_json::from_str(&body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))
    }
}
