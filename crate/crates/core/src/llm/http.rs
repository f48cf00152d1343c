use super::{check_count, ChatModel, ChatRequest, ChatResponse, LlmError};
use serde_json::json;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Extra tries after a transport error, a 429 or a 5xx.
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            retries: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

impl HttpConfig {
    /// Reads `ANPL_LLM_ENDPOINT`, `ANPL_LLM_MODEL`, `ANPL_LLM_API_KEY` (or
    /// `OPENAI_API_KEY`) and `ANPL_LLM_TIMEOUT_SECS`.
    pub fn from_env() -> Self {
        let mut c = HttpConfig::default();
        if let Ok(v) = std::env::var("ANPL_LLM_ENDPOINT") {
            c.endpoint = v;
        }
        if let Ok(v) = std::env::var("ANPL_LLM_MODEL") {
            c.model = v;
        }
        c.api_key = std::env::var("ANPL_LLM_API_KEY").or_else(|_| std::env::var("OPENAI_API_KEY")).ok();
        if let Some(secs) = std::env::var("ANPL_LLM_TIMEOUT_SECS").ok().and_then(|v| v.parse().ok()) {
            c.timeout = Duration::from_secs(secs);
        }
        c
    }
}

/// Client for OpenAI-compatible chat-completion endpoints.
pub struct HttpModel {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpModel {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpModel { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn once(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "n": req.n_completions,
        });
        let mut rb = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = rb.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after_secs = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse().ok());
            return Err(LlmError::RateLimited { retry_after_secs });
        }
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Err(LlmError::Provider {
                status: status.as_u16(),
                body: text,
            });
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| LlmError::Provider {
            status: status.as_u16(),
            body: format!("unparseable body ({e}): {text}"),
        })?;
        let mut choices: Vec<(u64, String)> = v["choices"]
            .as_array()
            .ok_or_else(|| LlmError::Provider {
                status: status.as_u16(),
                body: format!("response has no choices: {text}"),
            })?
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let idx = c["index"].as_u64().unwrap_or(i as u64);
                (idx, c["message"]["content"].as_str().unwrap_or_default().to_string())
            })
            .collect();
        choices.sort_by_key(|(i, _)| *i);
        Ok(choices.into_iter().map(|(_, c)| c).collect())
    }
}

fn retryable(e: &LlmError) -> bool {
    match e {
        LlmError::Transport(_) | LlmError::Timeout | LlmError::RateLimited { .. } => true,
        LlmError::Provider { status, .. } => *status >= 500,
        _ => false,
    }
}

impl ChatModel for HttpModel {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut attempt = 0;
        loop {
            match self.once(req) {
                Ok(c) => return check_count(req, c),
                Err(e) if retryable(&e) && attempt < self.config.retries => {
                    let wait = e.retry_after().unwrap_or(self.config.backoff * 2u32.pow(attempt));
                    tracing::warn!(error = %e, attempt, "chat request failed, retrying");
                    std::thread::sleep(wait.min(Duration::from_secs(30)));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
