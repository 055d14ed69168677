//! Token embedding providers.
//!
//! Three kinds: a file-backed static table, an HTTP embeddings endpoint, and
//! a seeded-hash provider for offline tests. Vectors here are context-free
//! per token; a remote service may return contextual vectors if it computes
//! them.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::seed::derive_seed;

use super::SemSimError;

/// A batch of per-token vectors plus any tokens that needed a fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    /// One vector per input token, in input order.
    pub vectors: Vec<Vec<f64>>,
    /// Tokens absent from a static table that received a deterministic
    /// hash-derived vector instead.
    pub fallback_tokens: Vec<String>,
}

/// Anything that can embed a token list into fixed-dimension vectors.
///
/// Implementations must be safe for concurrent `embed` calls or say so via
/// [`EmbeddingProvider::single_threaded`]; the scorer respects the
/// declaration.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingBatch, SemSimError>;

    /// True when the provider must not be called from multiple threads.
    fn single_threaded(&self) -> bool {
        false
    }
}

/// Deterministic unit vector derived from a token and a seed. Used both as
/// the test provider and as the out-of-vocabulary fallback of the file
/// provider.
pub fn hashed_unit_vector(token: &str, seed: u64, dimension: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, token));
    let mut v: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Astronomically unlikely; pin the first axis instead.
        v[0] = 1.0;
    } else {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Seeded-hash test provider: every token maps to a stable pseudo-random
/// unit vector.
#[derive(Debug, Clone)]
pub struct HashProvider {
    pub seed: u64,
    pub dimension: usize,
}

impl HashProvider {
    pub fn new(seed: u64, dimension: usize) -> Self {
        HashProvider { seed, dimension }
    }
}

impl EmbeddingProvider for HashProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingBatch, SemSimError> {
        Ok(EmbeddingBatch {
            vectors: tokens
                .iter()
                .map(|t| hashed_unit_vector(t, self.seed, self.dimension))
                .collect(),
            fallback_tokens: Vec::new(),
        })
    }
}

/// Static token table loaded from a file.
///
/// Format: a header line `dim N`, then one token per line as
/// `token<TAB>space-separated decimals`. Unknown tokens fall back to a
/// seeded-hash vector and are reported in the batch.
pub struct FileProvider {
    table: HashMap<String, Vec<f64>>,
    dimension: usize,
    fallback_seed: u64,
}

impl FileProvider {
    pub fn load(path: &Path, fallback_seed: u64) -> Result<Self, SemSimError> {
        let content = std::fs::read_to_string(path).map_err(|e| SemSimError::Provider(
            format!("read {}: {e}", path.display()),
        ))?;
        let mut lines = content.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| SemSimError::Provider("empty embedding file".into()))?;
        let dimension: usize = header
            .strip_prefix("dim ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| {
                SemSimError::Provider(format!("expected header `dim N`, found `{header}`"))
            })?;
        if dimension == 0 {
            return Err(SemSimError::Provider("embedding dimension must be positive".into()));
        }

        let mut table = HashMap::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (token, rest) = line.split_once('\t').ok_or_else(|| {
                SemSimError::Provider(format!("line {}: expected token<TAB>values", idx + 1))
            })?;
            let vector: Result<Vec<f64>, _> =
                rest.split_whitespace().map(str::parse::<f64>).collect();
            let vector = vector.map_err(|e| {
                SemSimError::Provider(format!("line {}: bad value: {e}", idx + 1))
            })?;
            if vector.len() != dimension {
                return Err(SemSimError::Provider(format!(
                    "line {}: token `{token}` has {} values, expected {dimension}",
                    idx + 1,
                    vector.len()
                )));
            }
            table.insert(token.to_string(), vector);
        }
        Ok(FileProvider { table, dimension, fallback_seed })
    }

    pub fn from_table(table: HashMap<String, Vec<f64>>, dimension: usize, fallback_seed: u64) -> Self {
        FileProvider { table, dimension, fallback_seed }
    }
}

impl EmbeddingProvider for FileProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingBatch, SemSimError> {
        let mut vectors = Vec::with_capacity(tokens.len());
        let mut fallback_tokens = Vec::new();
        for token in tokens {
            match self.table.get(token) {
                Some(v) => vectors.push(v.clone()),
                None => {
                    vectors.push(hashed_unit_vector(token, self.fallback_seed, self.dimension));
                    fallback_tokens.push(token.clone());
                }
            }
        }
        Ok(EmbeddingBatch { vectors, fallback_tokens })
    }
}

#[derive(Deserialize)]
struct HttpEmbeddingData {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct HttpEmbeddingResponse {
    data: Vec<HttpEmbeddingData>,
}

/// Remote embeddings endpoint speaking the common JSON shape:
/// POST `{base_url}/embeddings` with `{"input": [tokens]}`, response
/// `{"data": [{"embedding": [...]}]}` in input order.
pub struct HttpProvider {
    base_url: String,
    dimension: usize,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, dimension: usize) -> Result<Self, SemSimError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(60))
            .build()
            .map_err(|e| SemSimError::Provider(format!("http client: {e}")))?;
        Ok(HttpProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            dimension,
            client,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingBatch, SemSimError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = serde_json::json!({ "input": tokens });
        let response = self
            .client
            .post(&url)
            .json(&body)
            .send()
            .map_err(|e| SemSimError::Provider(format!("POST {url}: {e}")))?;
        if !response.status().is_success() {
            return Err(SemSimError::Provider(format!(
                "POST {url}: status {}",
                response.status()
            )));
        }
        let parsed: HttpEmbeddingResponse = response
            .json()
            .map_err(|e| SemSimError::Provider(format!("decode embeddings: {e}")))?;
        if parsed.data.len() != tokens.len() {
            return Err(SemSimError::Provider(format!(
                "expected {} embeddings, got {}",
                tokens.len(),
                parsed.data.len()
            )));
        }
        let mut vectors = Vec::with_capacity(tokens.len());
        for item in parsed.data {
            if item.embedding.len() != self.dimension {
                return Err(SemSimError::DimensionMismatch {
                    expected: self.dimension,
                    found: item.embedding.len(),
                });
            }
            vectors.push(item.embedding);
        }
        Ok(EmbeddingBatch { vectors, fallback_tokens: Vec::new() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_provider_is_deterministic_per_token() {
        let provider = HashProvider::new(9, 16);
        let tokens = vec!["은행".to_string(), "account".to_string(), "은행".to_string()];
        let batch = provider.embed(&tokens).unwrap();
        assert_eq!(batch.vectors[0], batch.vectors[2]);
        assert_ne!(batch.vectors[0], batch.vectors[1]);
        let again = provider.embed(&tokens).unwrap();
        assert_eq!(batch, again);
        for v in &batch.vectors {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn file_provider_parses_and_falls_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        std::fs::write(&path, "dim 3\nhello\t1 0 0\nworld\t0.5 0.5 0\n").unwrap();
        let provider = FileProvider::load(&path, 1).unwrap();
        assert_eq!(provider.dimension(), 3);
        let batch = provider
            .embed(&["hello".to_string(), "missing".to_string()])
            .unwrap();
        assert_eq!(batch.vectors[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(batch.fallback_tokens, vec!["missing".to_string()]);
        // fallback vectors are stable across calls
        let again = provider.embed(&["missing".to_string()]).unwrap();
        assert_eq!(batch.vectors[1], again.vectors[0]);
    }

    #[test]
    fn file_provider_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        std::fs::write(&path, "dim 2\nshort\t1\n").unwrap();
        assert!(FileProvider::load(&path, 0).is_err());
        std::fs::write(&path, "dimension 2\n").unwrap();
        assert!(FileProvider::load(&path, 0).is_err());
    }
}
