//! Generation backends: the trait and the OpenAI-compatible HTTP client.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mock::{IdentityBackend, MockBackend};
use super::{AttackError, LlmBackendConfig, Price};

/// Raw completion output before accounting is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A synchronous completion backend, usable from multiple worker threads.
pub trait GenerateBackend: Send + Sync {
    fn attacker_id(&self) -> &str;
    fn model_name(&self) -> &str;
    fn temperature(&self) -> f64;
    fn max_output_tokens(&self) -> u32;
    fn price(&self) -> Price;
    fn complete(&self, prompt: &str) -> Result<BackendResponse, AttackError>;
}

/// Backend selection in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// OpenAI-compatible chat-completions endpoint.
    Http {
        name: String,
        #[serde(flatten)]
        config: LlmBackendConfig,
    },
    /// Deterministic offline rewriter.
    Mock {
        name: String,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        filler_gap: Option<usize>,
    },
    /// Echoes the transcript unchanged (the null attack).
    MockIdentity { name: String },
}

impl BackendSpec {
    pub fn name(&self) -> &str {
        match self {
            BackendSpec::Http { name, .. }
            | BackendSpec::Mock { name, .. }
            | BackendSpec::MockIdentity { name } => name,
        }
    }

    /// True when the backend needs no network access.
    pub fn is_offline(&self) -> bool {
        !matches!(self, BackendSpec::Http { .. })
    }

    /// Instantiates the backend; `fallback_seed` feeds mock backends without
    /// an explicit seed.
    pub fn build(&self, fallback_seed: u64) -> Result<Box<dyn GenerateBackend>, AttackError> {
        match self {
            BackendSpec::Http { name, config } => {
                Ok(Box::new(HttpBackend::new(name.clone(), config.clone())?))
            }
            BackendSpec::Mock { name, seed, filler_gap } => {
                let mut backend = MockBackend::new(name.clone(), seed.unwrap_or(fallback_seed));
                if let Some(gap) = filler_gap {
                    backend.filler_gap = (*gap).max(1);
                }
                Ok(Box::new(backend))
            }
            BackendSpec::MockIdentity { name } => Ok(Box::new(IdentityBackend::new(name.clone()))),
        }
    }
}

// ---- OpenAI-compatible wire types ----

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// OpenAI-compatible chat-completions client with retry and backoff.
///
/// Retries transport failures, 5xx, and 429 responses up to `max_retries`
/// times with exponential backoff (doubling from the configured base, plus
/// jitter); a 429 `Retry-After` header overrides the computed delay. Other
/// 4xx responses fail immediately.
pub struct HttpBackend {
    attacker_id: String,
    config: LlmBackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(attacker_id: String, config: LlmBackendConfig) -> Result<Self, AttackError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            AttackError::MissingApiKey {
                backend: attacker_id.clone(),
                var: config.api_key_env.clone(),
            }
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout_secs))
            .build()
            .map_err(|e| AttackError::Protocol(format!("http client: {e}")))?;
        Ok(HttpBackend { attacker_id, config, api_key, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn backoff_delay(&self, attempt: u32, retry_after: Option<f64>) -> Duration {
        if let Some(seconds) = retry_after {
            return Duration::from_secs_f64(seconds.max(0.0));
        }
        let base = self.config.retry_backoff_base_secs;
        let exp = base * f64::powi(2.0, attempt as i32);
        let jitter = if base > 0.0 {
            rand::thread_rng().gen_range(0.0..base * 0.5)
        } else {
            0.0
        };
        Duration::from_secs_f64(exp + jitter)
    }

    fn try_once(&self, prompt: &str) -> Result<BackendResponse, TryError> {
        let request = ChatRequest {
            model: &self.config.model_name,
            messages: [ChatMessage { role: "user", content: prompt }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_output_tokens,
        };
        let response = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.api_key)
            .json(&request)
            .send()
            .map_err(|e| TryError::Retryable(format!("transport: {e}"), None))?;

        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok());
            return Err(TryError::Retryable(format!("status {status}"), retry_after));
        }
        if status.is_server_error() {
            return Err(TryError::Retryable(format!("status {status}"), None));
        }
        if !status.is_success() {
            return Err(TryError::Fatal(AttackError::Generation {
                attempts: 1,
                last_error: format!("status {status}"),
            }));
        }

        let body: ChatResponse = response
            .json()
            .map_err(|e| TryError::Fatal(AttackError::Protocol(format!("decode body: {e}"))))?;
        let content = body
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| {
                TryError::Fatal(AttackError::Protocol("response has no message content".into()))
            })?;
        if content.is_empty() {
            return Err(TryError::Fatal(AttackError::Protocol(
                "response content is empty".into(),
            )));
        }
        if body.usage.is_none() {
            log::warn!("{}: response carried no usage block; cost will read 0", self.attacker_id);
        }
        let usage = body.usage.unwrap_or_default();
        Ok(BackendResponse {
            text: content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

enum TryError {
    /// Worth another attempt; optional server-provided delay in seconds.
    Retryable(String, Option<f64>),
    Fatal(AttackError),
}

impl GenerateBackend for HttpBackend {
    fn attacker_id(&self) -> &str {
        &self.attacker_id
    }

    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn temperature(&self) -> f64 {
        self.config.temperature
    }

    fn max_output_tokens(&self) -> u32 {
        self.config.max_output_tokens
    }

    fn price(&self) -> Price {
        self.config.price
    }

    fn complete(&self, prompt: &str) -> Result<BackendResponse, AttackError> {
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.try_once(prompt) {
                Ok(response) => return Ok(response),
                Err(TryError::Fatal(e)) => return Err(e),
                Err(TryError::Retryable(reason, retry_after)) => {
                    log::warn!(
                        "{}: attempt {} failed: {reason}",
                        self.attacker_id,
                        attempt + 1
                    );
                    last_error = reason;
                    if attempt < self.config.max_retries {
                        std::thread::sleep(self.backoff_delay(attempt, retry_after));
                    }
                }
            }
        }
        Err(AttackError::Generation { attempts: self.config.max_retries + 1, last_error })
    }
}

// The HTTP behaviors (retry, backoff, retry-after, error mapping) are
// exercised against a real local socket in tests/http_backend.rs.
