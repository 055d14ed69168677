//! Transcript corpora: ingestion, cleaning, tokenization, and splitting.

mod io;
pub mod synthetic;

pub use io::{read_corpus, read_csv, read_jsonl, write_jsonl};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Class label of a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Vishing,
    Benign,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Vishing => write!(f, "vishing"),
            Label::Benign => write!(f, "benign"),
        }
    }
}

/// Where a transcript came from: the ingested corpus, or an attack backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Original,
    Adversarial { attacker_id: String },
}

/// One labeled conversation text, optionally pre-tokenized by an external
/// morphological analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default = "default_source")]
    pub source: Source,
}

fn default_source() -> Source {
    Source::Original
}

impl Transcript {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Transcript {
            id: id.into(),
            text: text.into(),
            label,
            tokens: None,
            source: Source::Original,
        }
    }
}

/// Errors from corpus construction, ingestion, and splitting.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("transcript id must be non-empty")]
    EmptyId,
    #[error("duplicate transcript id `{0}`")]
    DuplicateId(String),
    #[error("transcript `{0}` has empty text")]
    EmptyText(String),
    #[error("transcript `{0}` has an empty token in its token list")]
    EmptyToken(String),
    #[error("passthrough tokenizer selected but transcript has no pre-supplied tokens")]
    MissingTokens,
    #[error("split counts ({train}+{val}+{test}) do not sum to corpus size {size}")]
    SplitCountMismatch {
        train: usize,
        val: usize,
        test: usize,
        size: usize,
    },
    #[error("char n-gram size must be at least 1")]
    ZeroNgram,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

/// An ordered, id-unique collection of transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    transcripts: Vec<Transcript>,
}

impl Corpus {
    /// Validates invariants: unique non-empty ids, non-empty text, and no
    /// empty tokens in pre-supplied token lists.
    pub fn new(transcripts: Vec<Transcript>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for t in &transcripts {
            if t.id.is_empty() {
                return Err(CorpusError::EmptyId);
            }
            if !seen.insert(t.id.clone()) {
                return Err(CorpusError::DuplicateId(t.id.clone()));
            }
            if t.text.is_empty() {
                return Err(CorpusError::EmptyText(t.id.clone()));
            }
            if let Some(tokens) = &t.tokens {
                if tokens.iter().any(|tok| tok.is_empty()) {
                    return Err(CorpusError::EmptyToken(t.id.clone()));
                }
            }
        }
        Ok(Corpus { transcripts })
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn len(&self) -> usize {
        self.transcripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transcripts.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Transcript> {
        self.transcripts.iter().find(|t| t.id == id)
    }

    /// Per-label transcript counts, computed from the contents.
    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.transcripts {
            *counts.entry(t.label).or_insert(0) += 1;
        }
        counts
    }

    /// Drops transcripts whose cleaned text duplicates an earlier one.
    ///
    /// Returns the deduplicated corpus and the ids that were dropped. The
    /// first occurrence wins; order is otherwise preserved.
    pub fn dedup_by_cleaned_text(&self, rules: &CleaningRules) -> (Corpus, Vec<String>) {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for t in &self.transcripts {
            let cleaned = clean_text(&t.text, rules);
            if seen.insert(cleaned) {
                kept.push(t.clone());
            } else {
                log::warn!("dropping duplicate transcript `{}`", t.id);
                dropped.push(t.id.clone());
            }
        }
        (Corpus { transcripts: kept }, dropped)
    }
}

/// Deterministic partition sizes and shuffle seed for [`split_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub val_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

/// Text cleaning switches. Defaults enable every rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningRules {
    /// Remove runs of two or more digit groups joined by hyphens before any
    /// per-character filtering, so phone-like numbers vanish whole.
    pub strip_phone_numbers: bool,
    pub strip_digits: bool,
    pub strip_punctuation: bool,
}

impl Default for CleaningRules {
    fn default() -> Self {
        CleaningRules {
            strip_phone_numbers: true,
            strip_digits: true,
            strip_punctuation: true,
        }
    }
}

/// Removes digits, punctuation, and phone-number patterns, then collapses
/// whitespace runs to single spaces and trims the ends.
///
/// Idempotent: cleaning already-clean text is the identity.
pub fn clean_text(raw: &str, rules: &CleaningRules) -> String {
    let phone_stripped;
    let input = if rules.strip_phone_numbers {
        phone_stripped = phone_pattern().replace_all(raw, " ");
        phone_stripped.as_ref()
    } else {
        raw
    };

    let mut out = String::with_capacity(input.len());
    let mut pending_space = false;
    for c in input.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        let keep = if c.is_numeric() {
            !rules.strip_digits
        } else if c.is_alphanumeric() {
            true
        } else {
            !rules.strip_punctuation
        };
        if keep {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

fn phone_pattern() -> &'static regex::Regex {
    use std::sync::OnceLock;
    static PATTERN: OnceLock<regex::Regex> = OnceLock::new();
    PATTERN.get_or_init(|| regex::Regex::new(r"[0-9]+(?:-[0-9]+)+").expect("valid regex"))
}

/// Tokenizer selection for the data-processing phase.
///
/// Morphological analysis is external: corpora may carry pre-supplied token
/// lists (`Passthrough`), with whitespace and character n-gram tokenizers as
/// built-in fallbacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TokenizerKind {
    Whitespace,
    CharNgram { n: usize },
    Passthrough,
}

/// Tokenizes cleaned text, or passes through pre-supplied tokens.
///
/// `presupplied` is only consulted by `Passthrough`; its absence there is the
/// missing-tokens error.
pub fn tokenize(
    cleaned: &str,
    tokenizer: &TokenizerKind,
    presupplied: Option<&[String]>,
) -> Result<Vec<String>, CorpusError> {
    match tokenizer {
        TokenizerKind::Whitespace => {
            Ok(cleaned.split_whitespace().map(str::to_string).collect())
        }
        TokenizerKind::CharNgram { n } => {
            if *n == 0 {
                return Err(CorpusError::ZeroNgram);
            }
            let mut out = Vec::new();
            for word in cleaned.split_whitespace() {
                let chars: Vec<char> = word.chars().collect();
                if chars.len() < *n {
                    continue;
                }
                for window in chars.windows(*n) {
                    out.push(window.iter().collect());
                }
            }
            Ok(out)
        }
        TokenizerKind::Passthrough => match presupplied {
            Some(tokens) => Ok(tokens.to_vec()),
            None => Err(CorpusError::MissingTokens),
        },
    }
}

/// A stop-word set loaded from a newline-delimited UTF-8 file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
}

impl StopList {
    pub fn empty() -> Self {
        StopList::default()
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        StopList {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    /// Loads one token per line; blank lines and `#`-prefixed comments are
    /// ignored.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let content = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let words = content
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(str::to_string)
            .collect();
        Ok(StopList { words })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Filters out stop-list tokens, preserving input order.
pub fn remove_stopwords(tokens: &[String], stoplist: &StopList) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t))
        .cloned()
        .collect()
}

/// Partitions a corpus into train/validation/test by a seeded shuffle.
///
/// The permutation is Fisher-Yates over a ChaCha8 stream seeded with
/// `spec.seed`, so the partition depends only on (corpus order, seed) and is
/// reproducible across platforms.
pub fn split_corpus(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    let size = corpus.len();
    if spec.train_count + spec.val_count + spec.test_count != size {
        return Err(CorpusError::SplitCountMismatch {
            train: spec.train_count,
            val: spec.val_count,
            test: spec.test_count,
            size,
        });
    }

    let mut order: Vec<usize> = (0..size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in (1..size).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let take = |range: std::ops::Range<usize>| Corpus {
        transcripts: order[range]
            .iter()
            .map(|&i| corpus.transcripts[i].clone())
            .collect(),
    };
    let train = take(0..spec.train_count);
    let val = take(spec.train_count..spec.train_count + spec.val_count);
    let test = take(spec.train_count + spec.val_count..size);
    Ok((train, val, test))
}
