//! HTTP client for an external vision-language model.
//!
//! Wire format, one POST per generation:
//!
//! ```text
//! request  {"model_id": "...", "messages": [{"role": "user", "text": "...", "image": "<base64>"}], "max_tokens": 128}
//! response {"text": "..."}
//! ```
//!
//! The bearer token is read from `DVE_LVLM_API_KEY` (or the variable named in
//! the config) when the client is built.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use dve_core::refinement::{LvlmClient, LvlmError};
use dve_core::ImagePremise;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

pub const API_KEY_ENV: &str = "DVE_LVLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LvlmConfig {
    pub endpoint: String,
    pub model_id: String,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Total attempts per generation, including the first.
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub backoff_ms: u64,
    /// Minimum spacing between requests issued by one client.
    pub min_interval_ms: u64,
    pub api_key_env: String,
    /// Send the premise image along with the prompt.
    pub send_image: bool,
}

impl Default for LvlmConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model_id: String::new(),
            max_tokens: 128,
            timeout_secs: 60,
            attempts: 3,
            backoff_ms: 500,
            min_interval_ms: 0,
            api_key_env: API_KEY_ENV.into(),
            send_image: true,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WireMessage<'a> {
    pub role: &'a str,
    pub text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct WireRequest<'a> {
    pub model_id: &'a str,
    pub messages: Vec<WireMessage<'a>>,
    pub max_tokens: u32,
}

#[derive(Debug, Deserialize)]
pub struct WireResponse {
    pub text: String,
}

pub struct HttpLvlmClient {
    config: LvlmConfig,
    api_key: Option<String>,
    http: Client,
    last_request: Mutex<Option<Instant>>,
}

enum Failure {
    Retryable(String),
    Fatal(LvlmError),
}

impl HttpLvlmClient {
    pub fn new(config: LvlmConfig) -> anyhow::Result<Self> {
        anyhow::ensure!(!config.endpoint.is_empty(), "LVLM endpoint is not configured");
        anyhow::ensure!(config.attempts >= 1, "LVLM attempts must be at least 1");
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let http = Client::builder().timeout(Duration::from_secs(config.timeout_secs)).build()?;
        Ok(Self { config, api_key, http, last_request: Mutex::new(None) })
    }

    pub fn config(&self) -> &LvlmConfig {
        &self.config
    }

    fn pace(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let gap = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, Failure> {
        self.pace();
        let mut req = self.http.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(Failure::Fatal(LvlmError::Rejected(format!("HTTP {status}: {}", detail.trim()))));
        }
        let parsed: WireResponse =
            resp.json().map_err(|e| Failure::Fatal(LvlmError::Rejected(format!("malformed response: {e}"))))?;
        Ok(parsed.text)
    }
}

impl LvlmClient for HttpLvlmClient {
    fn generate(&self, premise: &ImagePremise, prompt: &str) -> Result<String, LvlmError> {
        let image = if self.config.send_image {
            let bytes = std::fs::read(&premise.source_path)
                .map_err(|e| LvlmError::Rejected(format!("reading {}: {e}", premise.source_path)))?;
            Some(STANDARD.encode(bytes))
        } else {
            None
        };
        let body = WireRequest {
            model_id: &self.config.model_id,
            messages: vec![WireMessage { role: "user", text: prompt, image }],
            max_tokens: self.config.max_tokens,
        };
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 0..self.config.attempts {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => last = msg,
            }
        }
        Err(LvlmError::Transport(format!("{} attempts failed, last: {last}", self.config.attempts)))
    }
}
