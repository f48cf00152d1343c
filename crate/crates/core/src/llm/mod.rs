//! Chat-completion gateway: one trait, a scripted mock, record/replay
//! adapters and an HTTP client for OpenAI-compatible endpoints.

mod http;
mod mock;
mod record;

pub use http::{HttpConfig, HttpModel};
pub use mock::MockModel;
pub use record::{Exchange, RecordingModel, ReplayModel};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::Duration;

pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub n_completions: u32,
}

impl ChatRequest {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>, temperature: f64, n: u32) -> Self {
        ChatRequest {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature,
            max_tokens: DEFAULT_MAX_TOKENS,
            n_completions: n,
        }
    }

    /// Hex SHA-256 over the canonical form of (system, user, temperature, n).
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canon<'a> {
            system: &'a str,
            user: &'a str,
            temperature: String,
            n: u32,
        }
        let system = canonical_text(&self.system_text);
        let user = canonical_text(&self.user_text);
        let canon = Canon {
            system: &system,
            user: &user,
            temperature: format!("{:.3}", self.temperature),
            n: self.n_completions,
        };
        let bytes = serde_json::to_vec(&canon).expect("plain struct serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Newlines normalized to `\n`, trailing whitespace stripped from every line
/// and from the end.
pub fn canonical_text(s: &str) -> String {
    let s = s.replace("\r\n", "\n").replace('\r', "\n");
    let lines: Vec<&str> = s.split('\n').map(str::trim_end).collect();
    lines.join("\n").trim_end().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub completions: Vec<String>,
    pub request_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (retry after {retry_after_secs:?}s)")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("provider error {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("no scripted response for request {fingerprint}")]
    ScriptMiss { fingerprint: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("expected {expected} completions, got {got}")]
    CountMismatch { expected: u32, got: usize },
}

impl LlmError {
    pub fn retry_after(&self) -> Option<Duration> {
        match self {
            LlmError::RateLimited { retry_after_secs } => retry_after_secs.map(Duration::from_secs),
            _ => None,
        }
    }
}

pub trait ChatModel: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<T: ChatModel + ?Sized> ChatModel for std::sync::Arc<T> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }
}

pub(crate) fn check_count(req: &ChatRequest, completions: Vec<String>) -> Result<ChatResponse, LlmError> {
    if completions.len() != req.n_completions as usize {
        return Err(LlmError::CountMismatch {
            expected: req.n_completions,
            got: completions.len(),
        });
    }
    Ok(ChatResponse {
        completions,
        request_fingerprint: req.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_ignores_trailing_whitespace_and_crlf() {
        let a = ChatRequest::new("sys", "line one  \nline two\n\n", 0.0, 1);
        let b = ChatRequest::new("sys", "line one\r\nline two", 0.0, 1);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = ChatRequest::new("sys", " line one\nline two", 0.0, 1);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn fingerprint_distinguishes_temperature_and_n() {
        let a = ChatRequest::new("s", "u", 0.1, 1);
        assert_ne!(a.fingerprint(), ChatRequest::new("s", "u", 0.2, 1).fingerprint());
        assert_ne!(a.fingerprint(), ChatRequest::new("s", "u", 0.1, 10).fingerprint());
        assert_eq!(a.fingerprint(), ChatRequest::new("s", "u", 0.1 + 1e-9, 1).fingerprint());
        let mut m = a.clone();
        m.max_tokens = 5;
        assert_eq!(a.fingerprint(), m.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
