//! Deterministic offline generation backends.
//!
//! The mock backend rewrites the transcript portion of a prompt through a
//! seeded synonym table and interleaves benign filler sentences, standing in
//! for an LLM during tests and dry runs. The identity backend echoes the
//! transcript unchanged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seed::derive_seed;

use super::backend::{BackendResponse, GenerateBackend};
use super::{AttackError, Price};

/// Scam-flavored words and their softer replacements.
const SYNONYMS: &[(&str, &[&str])] = &[
    ("account", &["profile", "record"]),
    ("verify", &["confirm", "double-check"]),
    ("transfer", &["move", "send over"]),
    ("urgent", &["important", "pressing"]),
    ("immediately", &["soon", "promptly"]),
    ("password", &["passcode", "login details"]),
    ("security", &["safety", "protection"]),
    ("deposit", &["payment", "amount"]),
    ("freeze", &["hold", "pause"]),
    ("suspend", &["pause", "restrict"]),
    ("wire", &["send", "route"]),
    ("warrant", &["notice", "document"]),
    ("prosecutor", &["official", "case officer"]),
    ("investigation", &["review", "inquiry"]),
    ("penalty", &["fee", "charge"]),
    ("confirm", &["check", "acknowledge"]),
];

/// Benign sentences injected between transcript tokens.
const FILLERS: &[&str] = &[
    "by the way the weather has been lovely lately",
    "i hope your family is doing well these days",
    "we can go over the details whenever you are free",
    "thanks so much for taking the time to talk today",
    "it is always nice to catch up properly like this",
    "feel free to ask if anything is unclear",
];

const DEFAULT_FILLER_GAP: usize = 5;

fn transform(text: &str, seed: u64, filler_gap: usize) -> String {
    let gap = filler_gap.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "mock-generate"));
    let mut out: Vec<String> = Vec::new();
    let mut next_filler = gap + rng.gen_range(0..gap);
    let mut since_filler = 0;
    for token in text.split_whitespace() {
        let lowered = token.to_lowercase();
        match SYNONYMS.iter().find(|(word, _)| *word == lowered) {
            Some((_, options)) => {
                out.push(options[rng.gen_range(0..options.len())].to_string());
            }
            None => out.push(token.to_string()),
        }
        since_filler += 1;
        if since_filler >= next_filler {
            out.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
            since_filler = 0;
            next_filler = gap + rng.gen_range(0..gap);
        }
    }
    out.join(" ")
}

/// Deterministic adversarial rewrite of `prompt` (treated wholly as the
/// transcript portion): seeded synonym substitution plus benign filler
/// sentences every few tokens. Tokens outside the synonym table are
/// preserved verbatim and in order.
pub fn mock_generate(prompt: &str, seed: u64) -> String {
    transform(prompt, seed, DEFAULT_FILLER_GAP)
}

/// Offline stand-in for an LLM backend.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub attacker_id: String,
    pub seed: u64,
    pub filler_gap: usize,
    /// Separator used to locate the transcript portion: everything after
    /// the final occurrence is transformed. Matches the prompt template's
    /// separator.
    pub separator: String,
}

impl MockBackend {
    pub fn new(attacker_id: impl Into<String>, seed: u64) -> Self {
        MockBackend {
            attacker_id: attacker_id.into(),
            seed,
            filler_gap: DEFAULT_FILLER_GAP,
            separator: "\n\n".to_string(),
        }
    }

    fn transcript_portion<'a>(&self, prompt: &'a str) -> &'a str {
        match prompt.rfind(&self.separator) {
            Some(pos) => &prompt[pos + self.separator.len()..],
            None => prompt,
        }
    }
}

fn token_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl GenerateBackend for MockBackend {
    fn attacker_id(&self) -> &str {
        &self.attacker_id
    }

    fn model_name(&self) -> &str {
        "mock"
    }

    fn temperature(&self) -> f64 {
        0.0
    }

    fn max_output_tokens(&self) -> u32 {
        u32::MAX
    }

    fn price(&self) -> Price {
        Price::default()
    }

    fn complete(&self, prompt: &str) -> Result<BackendResponse, AttackError> {
        let portion = self.transcript_portion(prompt);
        let text = transform(portion, self.seed, self.filler_gap);
        Ok(BackendResponse {
            text: text.clone(),
            prompt_tokens: token_count(prompt),
            completion_tokens: token_count(&text),
        })
    }
}

/// A backend that returns the transcript portion untouched; the null attack.
#[derive(Debug, Clone)]
pub struct IdentityBackend {
    pub attacker_id: String,
    pub separator: String,
}

impl IdentityBackend {
    pub fn new(attacker_id: impl Into<String>) -> Self {
        IdentityBackend { attacker_id: attacker_id.into(), separator: "\n\n".to_string() }
    }
}

impl GenerateBackend for IdentityBackend {
    fn attacker_id(&self) -> &str {
        &self.attacker_id
    }

    fn model_name(&self) -> &str {
        "identity"
    }

    fn temperature(&self) -> f64 {
        0.0
    }

    fn max_output_tokens(&self) -> u32 {
        u32::MAX
    }

    fn price(&self) -> Price {
        Price::default()
    }

    fn complete(&self, prompt: &str) -> Result<BackendResponse, AttackError> {
        let portion = match prompt.rfind(&self.separator) {
            Some(pos) => &prompt[pos + self.separator.len()..],
            None => prompt,
        };
        Ok(BackendResponse {
            text: portion.to_string(),
            prompt_tokens: token_count(prompt),
            completion_tokens: token_count(portion),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_prompt_and_seed_reproduce_output() {
        let text = "please verify your account and transfer the deposit immediately";
        assert_eq!(mock_generate(text, 9), mock_generate(text, 9));
    }

    #[test]
    fn different_seed_changes_filler_placement() {
        let text = "one two three four five six seven eight nine ten eleven twelve";
        let a = mock_generate(text, 1);
        let b = mock_generate(text, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn tokens_outside_the_table_survive() {
        let text = "hello neighborly zebra account";
        let out = mock_generate(text, 4);
        for word in ["hello", "neighborly", "zebra"] {
            assert!(out.contains(word), "{word} missing from {out}");
        }
        assert!(!out.contains("account"), "synonym table should rewrite `account`");
    }

    #[test]
    fn backend_transforms_only_the_transcript_portion() {
        let backend = MockBackend::new("mock-a", 3);
        let prompt = "Rephrase this.\n\nAdd noise.\n\nverify the secret code now";
        let response = backend.complete(prompt).unwrap();
        assert!(!response.text.contains("Rephrase"));
        assert!(response.text.contains("code"));
        assert!(response.completion_tokens > 0);
        assert!(response.prompt_tokens >= response.completion_tokens);
    }

    #[test]
    fn identity_backend_echoes_portion() {
        let backend = IdentityBackend::new("noop");
        let prompt = "a\n\nb\n\nthe original text";
        let response = backend.complete(prompt).unwrap();
        assert_eq!(response.text, "the original text");
    }
}
