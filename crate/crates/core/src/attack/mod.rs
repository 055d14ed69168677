//! Adversarial prompt construction and LLM-backed transcript generation,
//! with caching, retry, and cost/latency accounting.

mod backend;
mod cache;
mod mock;
mod runner;

pub use backend::{BackendResponse, BackendSpec, GenerateBackend, HttpBackend};
pub use cache::GenerationCache;
pub use mock::{mock_generate, IdentityBackend, MockBackend};
pub use runner::{generate, generate_batch, BatchOptions};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Transcript;

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("template error: {0}")]
    Template(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("backend `{backend}`: missing API key environment variable {var}")]
    MissingApiKey { backend: String, var: String },
    #[error("generation failed after {attempts} attempt(s): {last_error}")]
    Generation { attempts: u32, last_error: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cache error: {0}")]
    Cache(String),
}

/// The marker substituted with the transcript text inside a template frame.
pub const TRANSCRIPT_SLOT: &str = "{transcript}";

/// A two-strategy adversarial prompt: a rephrasing instruction, a benign
/// noise-injection instruction, and a frame holding the transcript slot,
/// joined by a separator in that order.
///
/// The shipped skeleton carries placeholder wording; final prompt text is
/// the operator's responsibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub rephrase_instruction: String,
    pub noise_instruction: String,
    #[serde(default = "default_separator")]
    pub separator: String,
    #[serde(default = "default_frame")]
    pub transcript_frame: String,
}

fn default_separator() -> String {
    "\n\n".to_string()
}

fn default_frame() -> String {
    TRANSCRIPT_SLOT.to_string()
}

impl PromptTemplate {
    /// A starting template with placeholder instructions to be finalized by
    /// the operator.
    pub fn skeleton() -> Self {
        PromptTemplate {
            rephrase_instruction:
                "Rephrase the following call transcript so explicit indicators are softened \
                 while the speaker's intent is unchanged."
                    .to_string(),
            noise_instruction:
                "Additionally, weave in short, contextually appropriate benign small talk \
                 between the original points without altering their meaning."
                    .to_string(),
            separator: default_separator(),
            transcript_frame: default_frame(),
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.rephrase_instruction.is_empty() {
            return Err(AttackError::Template("rephrase_instruction is empty".into()));
        }
        if self.noise_instruction.is_empty() {
            return Err(AttackError::Template("noise_instruction is empty".into()));
        }
        let occurrences = self.transcript_frame.matches(TRANSCRIPT_SLOT).count();
        if occurrences != 1 {
            return Err(AttackError::Template(format!(
                "transcript_frame must contain `{TRANSCRIPT_SLOT}` exactly once, found {occurrences}"
            )));
        }
        Ok(())
    }

    /// Loads a template from a TOML file.
    pub fn load(path: &std::path::Path) -> Result<Self, AttackError> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| AttackError::Template(format!("read {}: {e}", path.display())))?;
        let template: PromptTemplate = toml::from_str(&content)
            .map_err(|e| AttackError::Template(format!("{}: {e}", path.display())))?;
        template.validate()?;
        Ok(template)
    }
}

/// Composes the combined prompt: rephrase ++ sep ++ noise ++ sep ++ frame
/// with the transcript substituted. Byte-deterministic.
pub fn build_prompt(template: &PromptTemplate, transcript: &Transcript) -> Result<String, AttackError> {
    template.validate()?;
    if transcript.text.is_empty() {
        return Err(AttackError::Input(format!(
            "transcript `{}` has empty text",
            transcript.id
        )));
    }
    let framed = template.transcript_frame.replace(TRANSCRIPT_SLOT, &transcript.text);
    Ok(format!(
        "{}{sep}{}{sep}{}",
        template.rephrase_instruction,
        template.noise_instruction,
        framed,
        sep = template.separator
    ))
}

/// Per-million-token prices in USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Price {
    pub input_per_1m_tokens: f64,
    pub output_per_1m_tokens: f64,
}

impl Price {
    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 * self.input_per_1m_tokens / 1e6
            + completion_tokens as f64 * self.output_per_1m_tokens / 1e6
    }
}

/// Connection settings for an OpenAI-compatible chat-completions backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmBackendConfig {
    /// Base URL up to the API root, e.g. `https://api.openai.com/v1`; the
    /// client posts to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay; doubles per attempt with jitter.
    #[serde(default = "default_backoff")]
    pub retry_backoff_base_secs: f64,
    #[serde(default)]
    pub price: Price,
}

fn default_temperature() -> f64 {
    0.7
}
fn default_max_output_tokens() -> u32 {
    1024
}
fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> f64 {
    1.0
}

impl LlmBackendConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        let bad = |msg: String| Err(AttackError::Input(msg));
        if self.temperature < 0.0 {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.price.input_per_1m_tokens < 0.0 || self.price.output_per_1m_tokens < 0.0 {
            return bad("prices must be >= 0".into());
        }
        if self.request_timeout_secs <= 0.0 {
            return bad("request_timeout_secs must be positive".into());
        }
        if self.retry_backoff_base_secs < 0.0 {
            return bad("retry_backoff_base_secs must be >= 0".into());
        }
        Ok(())
    }
}

/// One attack generation with its accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub transcript_id: String,
    pub attacker_id: String,
    /// Digest of (model, prompt, temperature, max_output_tokens); doubles as
    /// the cache key.
    pub prompt_hash: String,
    pub output_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_secs: f64,
    pub cost_usd: f64,
    pub refusal_flag: bool,
    pub timestamp: DateTime<Utc>,
    /// True when this call was served from the cache. Runtime-only; not
    /// persisted, so cached replays reproduce the original record bytes.
    #[serde(skip)]
    pub cached: bool,
}

/// Cache key: SHA-256 over model name, prompt bytes, temperature, and the
/// output-token cap.
pub fn prompt_cache_key(
    model_name: &str,
    prompt: &str,
    temperature: f64,
    max_output_tokens: u32,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0]);
    hasher.update(prompt.as_bytes());
    hasher.update([0]);
    hasher.update(temperature.to_le_bytes());
    hasher.update(max_output_tokens.to_le_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Case-insensitive substring matcher for refusal phrases.
#[derive(Debug, Clone, Default)]
pub struct RefusalDetector {
    patterns: Vec<String>,
}

impl RefusalDetector {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(patterns: I) -> Self {
        RefusalDetector {
            patterns: patterns.into_iter().map(|p| p.into().to_lowercase()).collect(),
        }
    }

    /// Patterns observed in common refusal phrasings; operators extend the
    /// list per model family.
    pub fn default_patterns() -> Self {
        RefusalDetector::new([
            "i can't assist",
            "i cannot assist",
            "i can't help with",
            "i cannot help with",
            "i'm sorry, but i can't",
            "as an ai",
        ])
    }

    pub fn is_refusal(&self, output: &str) -> bool {
        if self.patterns.is_empty() {
            return false;
        }
        let lowered = output.to_lowercase();
        self.patterns.iter().any(|p| lowered.contains(p))
    }
}
