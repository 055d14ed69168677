//! TF-IDF vectorization: fit a vocabulary on training token lists, then map
//! documents to sparse feature vectors.
//!
//! Weighting is raw term count times smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, optionally L2-normalized. All knobs live in
//! [`TfidfConfig`] and are echoed into the persisted model so an experiment
//! is self-describing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Tuning knobs for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    /// Tokens must appear in at least this many documents to enter the
    /// vocabulary.
    pub min_doc_freq: usize,
    /// L2-normalize transformed vectors.
    pub normalize: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig { min_doc_freq: 1, normalize: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TfidfError {
    #[error("cannot fit: no non-empty documents")]
    EmptyCorpus,
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file {path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

/// A fitted vocabulary with per-feature idf weights.
///
/// Feature indices are dense in `[0, vocabulary_len)` and assigned in
/// lexicographic token order, so fitting is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_count: usize,
    config: TfidfConfig,
}

/// A sorted sparse vector of (feature index, weight) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFeatureVector {
    entries: Vec<(u32, f64)>,
    dimension: usize,
}

impl SparseFeatureVector {
    /// Builds from entries, dropping zero weights and sorting by index.
    /// Panics if an index repeats or exceeds the dimension; callers construct
    /// these from vocabulary lookups where neither can happen.
    pub fn new(mut entries: Vec<(u32, f64)>, dimension: usize) -> Self {
        entries.retain(|&(_, w)| w != 0.0);
        entries.sort_unstable_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            assert!(pair[0].0 < pair[1].0, "duplicate feature index {}", pair[1].0);
        }
        if let Some(&(last, _)) = entries.last() {
            assert!((last as usize) < dimension, "index {last} out of dimension {dimension}");
        }
        SparseFeatureVector { entries, dimension }
    }

    pub fn zero(dimension: usize) -> Self {
        SparseFeatureVector { entries: Vec::new(), dimension }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weight at a feature index (zero when absent).
    pub fn get(&self, index: u32) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Dot product against a dense weight slice of matching dimension.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }
}

/// Fits vocabulary and idf weights on training documents.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, where N is the document count and
/// df the number of documents containing t. Tokens below `min_doc_freq`
/// documents are excluded.
pub fn fit(train_docs: &[Vec<String>], config: TfidfConfig) -> Result<TfidfModel, TfidfError> {
    if train_docs.iter().all(|d| d.is_empty()) {
        return Err(TfidfError::EmptyCorpus);
    }
    let doc_count = train_docs.len();

    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in train_docs {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for token in unique {
            *doc_freq.entry(token).or_insert(0) += 1;
        }
    }

    let mut vocabulary = HashMap::new();
    let mut idf = Vec::new();
    // BTreeMap iteration gives lexicographic index assignment.
    for (token, df) in &doc_freq {
        if *df < config.min_doc_freq.max(1) {
            continue;
        }
        let weight = ((1.0 + doc_count as f64) / (1.0 + *df as f64)).ln() + 1.0;
        vocabulary.insert(token.to_string(), idf.len());
        idf.push(weight);
    }

    Ok(TfidfModel { vocabulary, idf, doc_count, config })
}

/// Maps a token list to a sparse TF-IDF vector under a fitted model.
///
/// Out-of-vocabulary tokens are ignored; an all-OOV document yields the zero
/// vector.
pub fn transform(tokens: &[String], model: &TfidfModel) -> SparseFeatureVector {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for token in tokens {
        if let Some(&idx) = model.vocabulary.get(token) {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(idx, count)| (idx as u32, count * model.idf[idx]))
        .collect();
    entries.sort_unstable_by_key(|&(i, _)| i);

    if model.config.normalize {
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for entry in &mut entries {
                entry.1 /= norm;
            }
        }
    }
    SparseFeatureVector { entries, dimension: model.idf.len() }
}

impl TfidfModel {
    pub fn dimension(&self) -> usize {
        self.idf.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn config(&self) -> TfidfConfig {
        self.config
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&i| self.idf[i])
    }

    pub fn feature_index(&self, token: &str) -> Option<usize> {
        self.vocabulary.get(token).copied()
    }

    /// Writes the model as a versioned tab-separated flat file: a header with
    /// dimension and config, then one `token<TAB>index<TAB>idf` row per
    /// vocabulary entry.
    pub fn save(&self, path: &Path) -> Result<(), TfidfError> {
        let io = |source| TfidfError::Io { path: path.display().to_string(), source };
        let mut file = std::fs::File::create(path).map_err(io)?;
        let mut header = String::new();
        header.push_str("tfidf-model\tv1\n");
        header.push_str(&format!("dimension\t{}\n", self.dimension()));
        header.push_str(&format!("doc_count\t{}\n", self.doc_count));
        header.push_str(&format!("min_doc_freq\t{}\n", self.config.min_doc_freq));
        header.push_str(&format!("normalize\t{}\n", self.config.normalize));
        // Weighting scheme flags, so a model file states its own formula.
        header.push_str("tf\traw_count\n");
        header.push_str("idf\tln((1+N)/(1+df))+1\n");
        file.write_all(header.as_bytes()).map_err(io)?;

        let mut rows: Vec<(&str, usize)> =
            self.vocabulary.iter().map(|(t, &i)| (t.as_str(), i)).collect();
        rows.sort_unstable_by_key(|&(_, i)| i);
        for (token, index) in rows {
            writeln!(file, "{token}\t{index}\t{:?}", self.idf[index]).map_err(io)?;
        }
        Ok(())
    }

    /// Loads a model written by [`TfidfModel::save`].
    pub fn load(path: &Path) -> Result<Self, TfidfError> {
        let io = |source| TfidfError::Io { path: path.display().to_string(), source };
        let fmt = |line: usize, message: String| TfidfError::Format {
            path: path.display().to_string(),
            line,
            message,
        };
        let file = std::fs::File::open(path).map_err(io)?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let mut expect = |key: &str| -> Result<String, TfidfError> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| fmt(0, "unexpected end of file".into()))?;
            let line = line.map_err(io)?;
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| fmt(idx + 1, "expected tab-separated header row".into()))?;
            if k != key {
                return Err(fmt(idx + 1, format!("expected header `{key}`, found `{k}`")));
            }
            Ok(v.to_string())
        };

        let version = expect("tfidf-model")?;
        if version != "v1" {
            return Err(fmt(1, format!("unsupported model version `{version}`")));
        }
        let dimension: usize =
            expect("dimension")?.parse().map_err(|e| fmt(2, format!("bad dimension: {e}")))?;
        let doc_count: usize =
            expect("doc_count")?.parse().map_err(|e| fmt(3, format!("bad doc_count: {e}")))?;
        let min_doc_freq: usize = expect("min_doc_freq")?
            .parse()
            .map_err(|e| fmt(4, format!("bad min_doc_freq: {e}")))?;
        let normalize: bool =
            expect("normalize")?.parse().map_err(|e| fmt(5, format!("bad normalize: {e}")))?;
        expect("tf")?;
        expect("idf")?;

        let mut vocabulary = HashMap::with_capacity(dimension);
        let mut idf = vec![0.0; dimension];
        let mut filled = vec![false; dimension];
        for (idx, line) in lines {
            let line = line.map_err(io)?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (token, index, weight) = match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(i), Some(w)) => (t, i, w),
                _ => return Err(fmt(idx + 1, "expected token<TAB>index<TAB>idf".into())),
            };
            let index: usize =
                index.parse().map_err(|e| fmt(idx + 1, format!("bad index: {e}")))?;
            let weight: f64 =
                weight.parse().map_err(|e| fmt(idx + 1, format!("bad idf: {e}")))?;
            if index >= dimension {
                return Err(fmt(idx + 1, format!("index {index} out of range {dimension}")));
            }
            if filled[index] {
                return Err(fmt(idx + 1, format!("duplicate feature index {index}")));
            }
            filled[index] = true;
            idf[index] = weight;
            vocabulary.insert(token.to_string(), index);
        }
        if filled.iter().any(|f| !f) {
            return Err(fmt(0, "vocabulary rows do not cover every feature index".into()));
        }
        Ok(TfidfModel {
            vocabulary,
            idf,
            doc_count,
            config: TfidfConfig { min_doc_freq, normalize },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect()
    }

    fn two_doc_model() -> TfidfModel {
        fit(&docs(&[&["a", "b"], &["a", "c"]]), TfidfConfig::default()).unwrap()
    }

    #[test]
    fn fit_computes_smoothed_idf() {
        let model = two_doc_model();
        assert_eq!(model.dimension(), 3);
        assert!((model.idf_of("a").unwrap() - 1.0).abs() < 1e-12);
        let expected_b = (3.0f64 / 2.0).ln() + 1.0;
        assert!((model.idf_of("b").unwrap() - expected_b).abs() < 1e-12);
        assert!((expected_b - 1.405465).abs() < 1e-6);
    }

    #[test]
    fn single_document_forces_idf_one() {
        let model = fit(&docs(&[&["x"]]), TfidfConfig::default()).unwrap();
        assert!((model.idf_of("x").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_doc_freq_prunes_rare_tokens() {
        let mut raw: Vec<Vec<String>> = (0..10).map(|i| vec![format!("common{}", i % 2)]).collect();
        raw[0].push("z".to_string());
        let model = fit(&raw, TfidfConfig { min_doc_freq: 2, ..Default::default() }).unwrap();
        assert!(model.idf_of("z").is_none());
        assert!(model.idf_of("common0").is_some());
    }

    #[test]
    fn fit_rejects_all_empty_documents() {
        assert!(matches!(
            fit(&docs(&[&[], &[]]), TfidfConfig::default()),
            Err(TfidfError::EmptyCorpus)
        ));
    }

    #[test]
    fn transform_matches_hand_computation() {
        let model = two_doc_model();
        let v = transform(&["a".to_string(), "b".to_string()], &model);
        // pre-norm weights (1.0, 1.405465...) then L2 normalization:
        // exact values (0.579739, 0.814803)
        let idf_b = (3.0f64 / 2.0).ln() + 1.0;
        let norm = (1.0 + idf_b * idf_b).sqrt();
        let a_idx = model.feature_index("a").unwrap() as u32;
        let b_idx = model.feature_index("b").unwrap() as u32;
        assert!((v.get(a_idx) - 1.0 / norm).abs() < 1e-12);
        assert!((v.get(b_idx) - idf_b / norm).abs() < 1e-12);
        assert!((v.get(a_idx) - 0.5797).abs() < 1e-4);
        assert!((v.get(b_idx) - 0.8148).abs() < 1e-4);
    }

    #[test]
    fn all_oov_yields_zero_vector() {
        let model = two_doc_model();
        let v = transform(&["q".to_string()], &model);
        assert!(v.is_zero());
        assert_eq!(v.dimension(), 3);
    }

    #[test]
    fn repeated_token_doubles_raw_weight() {
        let mut model = two_doc_model();
        model.config.normalize = false;
        let single = transform(&["a".to_string()], &model);
        let double = transform(&["a".to_string(), "a".to_string()], &model);
        let idx = model.feature_index("a").unwrap() as u32;
        assert!((double.get(idx) - 2.0 * single.get(idx)).abs() < 1e-12);
    }

    #[test]
    fn normalized_vectors_have_unit_norm() {
        let model = two_doc_model();
        let v = transform(&["a".to_string(), "b".to_string(), "c".to_string()], &model);
        assert!((v.l2_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transform_is_order_independent() {
        let model = two_doc_model();
        let fwd = transform(&["a".to_string(), "b".to_string(), "c".to_string()], &model);
        let rev = transform(&["c".to_string(), "b".to_string(), "a".to_string()], &model);
        assert_eq!(fwd, rev);
    }

    #[test]
    fn training_set_indices_stay_in_range() {
        let raw = docs(&[&["a", "b"], &["a", "c"], &["d", "e", "a"]]);
        let model = fit(&raw, TfidfConfig::default()).unwrap();
        for doc in &raw {
            let v = transform(doc, &model);
            for &(i, _) in v.entries() {
                assert!((i as usize) < model.dimension());
            }
        }
    }

    #[test]
    fn model_file_round_trips() {
        let model = fit(
            &docs(&[&["은행", "b"], &["은행", "c"], &["d"]]),
            TfidfConfig { min_doc_freq: 1, normalize: false },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tsv");
        model.save(&path).unwrap();
        let loaded = TfidfModel::load(&path).unwrap();
        assert_eq!(model, loaded);
    }
}
