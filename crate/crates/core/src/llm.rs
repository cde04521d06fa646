//! Chat-completion client for OpenAI-compatible endpoints.
//!
//! [`OpenAiClient`] posts to `<base_url>/chat/completions` and retries
//! transient failures (timeouts, connection errors, 429, 5xx) with capped
//! exponential backoff. [`MockLlm`] is the deterministic stand-in used by
//! tests and offline runs.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f32,
    pub max_tokens: u32,
    /// Empty means "use the client's configured model".
    pub model_name: String,
}

impl LlmRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>, temperature: f32) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature,
            max_tokens: 512,
            model_name: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_prompt.trim().is_empty() || self.user_prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompts must be non-empty".into()));
        }
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub text: String,
    pub latency: Duration,
    /// 1-based attempt number that produced this response.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("llm unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("llm authentication failed (status {0})")]
    AuthFailed(u16),
    #[error("llm rejected the request (status {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed llm response: {0}")]
    MalformedResponse(String),
    #[error("invalid llm request: {0}")]
    InvalidRequest(String),
}

pub trait LlmClient: Send + Sync {
    fn chat_complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for Arc<T> {
    fn chat_complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (**self).chat_complete(req)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn chat_complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (**self).chat_complete(req)
    }
}

type Responder = dyn Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync;

/// Deterministic in-process client backed by a closure.
#[derive(Clone)]
pub struct MockLlm {
    respond: Arc<Responder>,
}

impl MockLlm {
    pub fn new<F>(respond: F) -> Self
    where
        F: Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync + 'static,
    {
        Self {
            respond: Arc::new(respond),
        }
    }

    /// Always answers with `text`.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(move |_| Ok(text.clone()))
    }
}

impl std::fmt::Debug for MockLlm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MockLlm")
    }
}

impl LlmClient for MockLlm {
    fn chat_complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        req.validate()?;
        let start = Instant::now();
        let text = (self.respond)(req)?;
        Ok(LlmResponse {
            text,
            latency: start.elapsed(),
            attempt: 1,
        })
    }
}

/// A client that is always unavailable; used when no endpoint is configured.
#[derive(Debug, Clone, Copy, Default)]
pub struct DisabledLlm;

impl LlmClient for DisabledLlm {
    fn chat_complete(&self, _req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        Err(LlmError::Unavailable {
            attempts: 0,
            reason: "no llm endpoint configured".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    /// Concurrent requests allowed through one client.
    pub max_in_flight: usize,
    /// Environment variable holding the bearer credential.
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_base_ms: 250,
            backoff_cap_ms: 4_000,
            max_in_flight: 8,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

impl LlmConfig {
    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.backoff_cap_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
}

/// The HTTP seam under the client; swapped for fakes in tests.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<HttpReply, TransportError>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<HttpReply, TransportError> {
        let mut req = self
            .client
            .post(url)
            .timeout(timeout)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = bearer {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connect(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connect(e.to_string())
            }
        })?;
        Ok(HttpReply { status, body })
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    available: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 2],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

pub struct OpenAiClient {
    config: LlmConfig,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
    gate: Gate,
}

impl OpenAiClient {
    /// Reads the credential from `config.api_key_env`.
    pub fn from_env(config: LlmConfig) -> Self {
        let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(config, key, Arc::new(ReqwestTransport::new()))
    }

    pub fn new(config: LlmConfig, api_key: Option<String>, transport: Arc<dyn Transport>) -> Self {
        let gate = Gate::new(config.max_in_flight);
        Self {
            config,
            api_key,
            transport,
            gate,
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn parse_reply(body: &str) -> Result<String, LlmError> {
        let wire: WireResponse =
            serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
        wire.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::MalformedResponse("no choices[0].message.content".into()))
    }
}

impl LlmClient for OpenAiClient {
    fn chat_complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        req.validate()?;
        let model = if req.model_name.is_empty() {
            self.config.model.as_str()
        } else {
            req.model_name.as_str()
        };
        let body = serde_json::to_string(&WireRequest {
            model,
            messages: [
                WireMessage {
                    role: "system",
                    content: &req.system_prompt,
                },
                WireMessage {
                    role: "user",
                    content: &req.user_prompt,
                },
            ],
            temperature: req.temperature,
            max_tokens: req.max_tokens,
        })
        .map_err(|e| LlmError::InvalidRequest(e.to_string()))?;

        let url = self.endpoint();
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let max_attempts = self.config.max_retries + 1;
        let _permit = self.gate.acquire();
        let start = Instant::now();
        let mut last_reason = String::new();

        for attempt in 1..=max_attempts {
            if attempt > 1 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            match self.transport.post_json(&url, self.api_key.as_deref(), &body, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let text = Self::parse_reply(&reply.body)?;
                    return Ok(LlmResponse {
                        text,
                        latency: start.elapsed(),
                        attempt,
                    });
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(LlmError::AuthFailed(reply.status));
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    tracing::warn!(attempt, status = reply.status, "transient llm failure");
                    last_reason = format!("status {}", reply.status);
                }
                Ok(reply) => {
                    return Err(LlmError::Rejected {
                        status: reply.status,
                        message: reply.body,
                    });
                }
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "transient llm failure");
                    last_reason = e.to_string();
                }
            }
        }
        Err(LlmError::Unavailable {
            attempts: max_attempts,
            reason: last_reason,
        })
    }
}
