//! Semantic similarity between token sequences by greedy maximum-cosine
//! matching of token embeddings, reported as precision / recall / F1.

mod provider;

pub use provider::{
    hashed_unit_vector, EmbeddingBatch, EmbeddingProvider, FileProvider, HashProvider,
    HttpProvider,
};

use serde::{Deserialize, Serialize};

use crate::corpus::Transcript;

#[derive(Debug, thiserror::Error)]
pub enum SemSimError {
    #[error("cannot score an empty token list ({side})")]
    EmptyTokens { side: &'static str },
    #[error("zero-norm embedding for token `{token}`")]
    ZeroNorm { token: String },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("NaN in embedding for token `{token}`")]
    NanEmbedding { token: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("pair alignment error: {0}")]
    Alignment(String),
}

/// Greedy-matching similarity scores for one (reference, candidate) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SemScore {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SemScore { precision, recall, f1 }
    }
}

fn validated_unit_vectors(
    tokens: &[String],
    batch: EmbeddingBatch,
    dimension: usize,
) -> Result<Vec<Vec<f64>>, SemSimError> {
    let mut unit = Vec::with_capacity(batch.vectors.len());
    for (token, vector) in tokens.iter().zip(batch.vectors) {
        if vector.len() != dimension {
            return Err(SemSimError::DimensionMismatch {
                expected: dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| x.is_nan()) {
            return Err(SemSimError::NanEmbedding { token: token.clone() });
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(SemSimError::ZeroNorm { token: token.clone() });
        }
        unit.push(vector.into_iter().map(|x| x / norm).collect());
    }
    Ok(unit)
}

/// Cosine of two unit vectors. Bitwise-identical vectors are exactly 1, so
/// identical token lists score exactly 1.
fn unit_cosine(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        1.0
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// Scores a candidate against a reference by greedy cosine matching.
///
/// Precision averages, over candidate tokens, the best cosine similarity to
/// any reference token; recall is the transpose; F1 is their harmonic mean.
pub fn bertscore(
    ref_tokens: &[String],
    cand_tokens: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<SemScore, SemSimError> {
    if ref_tokens.is_empty() {
        return Err(SemSimError::EmptyTokens { side: "reference" });
    }
    if cand_tokens.is_empty() {
        return Err(SemSimError::EmptyTokens { side: "candidate" });
    }
    let dimension = provider.dimension();
    let ref_vectors = validated_unit_vectors(ref_tokens, provider.embed(ref_tokens)?, dimension)?;
    let cand_vectors =
        validated_unit_vectors(cand_tokens, provider.embed(cand_tokens)?, dimension)?;

    // Unit vectors make every pairwise dot product a cosine similarity.
    let best_for_cand: f64 = cand_vectors
        .iter()
        .map(|c| {
            ref_vectors
                .iter()
                .map(|r| unit_cosine(r, c))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    let best_for_ref: f64 = ref_vectors
        .iter()
        .map(|r| {
            cand_vectors
                .iter()
                .map(|c| unit_cosine(r, c))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();

    let precision = best_for_cand / cand_vectors.len() as f64;
    let recall = best_for_ref / ref_vectors.len() as f64;
    Ok(SemScore::from_pr(precision, recall))
}

/// One scored (original, adversarial) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub transcript_id: String,
    pub score: SemScore,
    /// Tokens that needed a fallback embedding, if the provider reported any.
    pub fallback_count: usize,
}

/// Histogram over F1 with fixed-width bins. The closed top bin `[1-w, 1]`
/// absorbs exact-1 scores; bins below zero appear only if scores go negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// (bin lower edge, count), sorted ascending, empty bins omitted.
    pub bins: Vec<(f64, usize)>,
}

/// Default histogram bin width over F1 scores.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

pub fn histogram(f1_scores: &[f64], bin_width: f64) -> Histogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let top_bin = ((1.0 / bin_width).ceil() as i64 - 1).max(0);
    let mut counts: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    for &f1 in f1_scores {
        // Epsilon compensates for quotients like 0.3/0.1 landing just below
        // the integer they represent.
        let raw = (f1 / bin_width + 1e-9).floor() as i64;
        let bin = raw.min(top_bin);
        *counts.entry(bin).or_insert(0) += 1;
    }
    Histogram {
        bin_width,
        bins: counts.into_iter().map(|(b, c)| (b as f64 * bin_width, c)).collect(),
    }
}

/// Scores aligned (original, adversarial) transcript pairs and builds the F1
/// histogram.
///
/// Pairs must agree on transcript id; a mismatch is an alignment error. The
/// tokenization is caller-supplied via `tokenize`, so the scorer stays
/// independent of the corpus pipeline's tokenizer choice.
pub fn score_corpus(
    pairs: &[(Transcript, Transcript)],
    provider: &dyn EmbeddingProvider,
    tokenize: impl Fn(&Transcript) -> Vec<String>,
    bin_width: f64,
) -> Result<(Vec<PairScore>, Histogram), SemSimError> {
    let mut scores = Vec::with_capacity(pairs.len());
    for (original, adversarial) in pairs {
        if original.id != adversarial.id {
            return Err(SemSimError::Alignment(format!(
                "pair ids differ: `{}` vs `{}`",
                original.id, adversarial.id
            )));
        }
        let ref_tokens = tokenize(original);
        let cand_tokens = tokenize(adversarial);
        let fallback_count = {
            let a = provider.embed(&ref_tokens)?;
            let b = provider.embed(&cand_tokens)?;
            a.fallback_tokens.len() + b.fallback_tokens.len()
        };
        let score = bertscore(&ref_tokens, &cand_tokens, provider)?;
        scores.push(PairScore { transcript_id: original.id.clone(), score, fallback_count });
    }
    let f1s: Vec<f64> = scores.iter().map(|p| p.score.f1).collect();
    Ok((scores, histogram(&f1s, bin_width)))
}
