//! Run configuration: one versioned TOML file describing corpus, split,
//! features, classifiers, attack backends, embeddings, and outputs.
//!
//! Relative paths are resolved against the config file's directory. Every
//! randomized stage derives its seed from `global_seed` unless a stage seed
//! is given explicitly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{BackendSpec, PromptTemplate, RefusalDetector};
use crate::classify::{Algorithm, ClassifierSpec, Hyperparams};
use crate::corpus::{CleaningRules, SplitSpec, TokenizerKind};
use crate::seed::derive_seed;
use crate::tfidf::TfidfConfig;

use super::PipelineError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub global_seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub split: SplitConfig,
    #[serde(default)]
    pub tfidf: TfidfConfig,
    pub classifiers: Vec<ClassifierConfig>,
    pub attack: AttackConfig,
    #[serde(default)]
    pub embeddings: EmbeddingConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default = "default_tokenizer")]
    pub tokenizer: TokenizerKind,
    #[serde(default)]
    pub cleaning: CleaningRules,
}

fn default_tokenizer() -> TokenizerKind {
    TokenizerKind::Whitespace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Display name; defaults to the algorithm name, suffixed on repeats.
    #[serde(default)]
    pub name: Option<String>,
}

/// Which samples form the adversarial evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationSet {
    /// Only the (non-refused) adversarial vishing transcripts; the accuracy
    /// denominator equals the non-refused generation count.
    #[default]
    VishingOnly,
    /// Adversarial vishing transcripts plus the original benign test set.
    MixedWithBenign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    /// Prompt template TOML; the built-in skeleton is used when absent.
    #[serde(default)]
    pub template: Option<PathBuf>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Generation cache directory; `<output_dir>/cache` when absent.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub evaluation_set: EvaluationSet,
    /// Refusal substrings; a built-in list is used when absent.
    #[serde(default)]
    pub refusal_patterns: Option<Vec<String>>,
    pub backends: Vec<BackendSpec>,
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    /// Seeded-hash vectors; fully offline.
    Hash {
        #[serde(default = "default_embedding_dim")]
        dimension: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Static token table file.
    File { path: PathBuf },
    /// Remote embeddings endpoint.
    Http { base_url: String, dimension: usize },
}

fn default_embedding_dim() -> usize {
    64
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hash { dimension: default_embedding_dim(), seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "default_bin_width")]
    pub bertscore_bin_width: f64,
}

fn default_bin_width() -> f64 {
    crate::semsim::DEFAULT_BIN_WIDTH
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { bertscore_bin_width: default_bin_width() }
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl RunConfig {
    /// Parses a TOML config, resolves relative paths against the file's
    /// directory, and validates it.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("read {}: {e}", path.display()))
        })?;
        let mut config: RunConfig = toml::from_str(&content)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        config.resolve_paths(&base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output_dir);
        resolve(base, &mut self.corpus.path);
        if let Some(stopwords) = &mut self.corpus.stopwords {
            resolve(base, stopwords);
        }
        if let Some(template) = &mut self.attack.template {
            resolve(base, template);
        }
        if let Some(cache) = &mut self.attack.cache_dir {
            resolve(base, cache);
        }
        if let EmbeddingConfig::File { path } = &mut self.embeddings {
            resolve(base, path);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.config_version != CONFIG_VERSION {
            return bad(format!(
                "config_version {} unsupported (expected {CONFIG_VERSION})",
                self.config_version
            ));
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required".into());
        }
        if self.attack.backends.is_empty() {
            return bad("at least one attack backend is required".into());
        }
        if self.attack.concurrency == 0 {
            return bad("attack.concurrency must be at least 1".into());
        }
        if !(self.report.bertscore_bin_width > 0.0) {
            return bad("report.bertscore_bin_width must be positive".into());
        }
        let mut names: Vec<&str> = self.attack.backends.iter().map(|b| b.name()).collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return bad(format!("duplicate backend name `{}`", pair[0]));
            }
        }
        for (path, what) in self.referenced_paths() {
            if !path.exists() {
                return bad(format!("{what} does not exist: {}", path.display()));
            }
        }
        Ok(())
    }

    fn referenced_paths(&self) -> Vec<(&Path, &'static str)> {
        let mut paths: Vec<(&Path, &'static str)> = vec![(&self.corpus.path, "corpus path")];
        if let Some(p) = &self.corpus.stopwords {
            paths.push((p, "stop-word file"));
        }
        if let Some(p) = &self.attack.template {
            paths.push((p, "prompt template"));
        }
        if let EmbeddingConfig::File { path } = &self.embeddings {
            paths.push((path, "embedding file"));
        }
        paths
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_count: self.split.train,
            val_count: self.split.val,
            test_count: self.split.test,
            seed: self.split.seed.unwrap_or_else(|| derive_seed(self.global_seed, "split")),
        }
    }

    /// (display name, trainable spec) pairs with unique names.
    pub fn classifier_specs(&self) -> Vec<(String, ClassifierSpec)> {
        let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        self.classifiers
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let base = c
                    .name
                    .clone()
                    .unwrap_or_else(|| c.algorithm.name().to_string());
                let count = seen.entry(base.clone()).or_insert(0);
                *count += 1;
                let name = if *count == 1 { base } else { format!("{base}-{count}") };
                let seed = c.seed.unwrap_or_else(|| {
                    derive_seed(self.global_seed, &format!("train:{}:{idx}", c.algorithm.name()))
                });
                (
                    name,
                    ClassifierSpec { algorithm: c.algorithm, hyperparams: c.hyperparams, seed },
                )
            })
            .collect()
    }

    pub fn refusal_detector(&self) -> RefusalDetector {
        match &self.attack.refusal_patterns {
            Some(patterns) => RefusalDetector::new(patterns.iter().cloned()),
            None => RefusalDetector::default_patterns(),
        }
    }

    pub fn template(&self) -> Result<PromptTemplate, PipelineError> {
        match &self.attack.template {
            Some(path) => PromptTemplate::load(path)
                .map_err(|e| PipelineError::Config(e.to_string())),
            None => Ok(PromptTemplate::skeleton()),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.attack
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("cache"))
    }

    /// Fallback seed for a mock backend without its own.
    pub fn backend_seed(&self, backend_name: &str) -> u64 {
        derive_seed(self.global_seed, &format!("attack:{backend_name}"))
    }

    pub fn embedding_seed(&self) -> u64 {
        derive_seed(self.global_seed, "embeddings")
    }
}

/// Artifact locations under one run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    out: PathBuf,
}

/// File-system-safe version of an attacker or classifier name.
pub fn sanitize_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect::<String>()
        .to_lowercase()
}

impl RunPaths {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunPaths { out: out.into() }
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn prepared(&self, split: &str) -> PathBuf {
        self.out.join("prepared").join(format!("{split}.jsonl"))
    }

    pub fn tfidf_model(&self) -> PathBuf {
        self.out.join("models").join("tfidf.tsv")
    }

    pub fn classifier_model(&self, name: &str) -> PathBuf {
        self.out.join("models").join(format!("{}.json", sanitize_name(name)))
    }

    pub fn prompts(&self) -> PathBuf {
        self.out.join("prompts.jsonl")
    }

    pub fn generations(&self) -> PathBuf {
        self.out.join("generations.jsonl")
    }

    pub fn accuracy_matrix(&self) -> PathBuf {
        self.out.join("tables").join("accuracy_matrix.csv")
    }

    pub fn eval_table(&self, set_name: &str) -> PathBuf {
        self.out.join("tables").join(format!("eval_{}.csv", sanitize_name(set_name)))
    }

    pub fn roc(&self, set_name: &str, classifier: &str) -> PathBuf {
        self.out
            .join("roc")
            .join(format!("{}_{}.csv", sanitize_name(set_name), sanitize_name(classifier)))
    }

    pub fn stats_report(&self) -> PathBuf {
        self.out.join("stats").join("test_report.json")
    }

    pub fn stats_summary(&self) -> PathBuf {
        self.out.join("stats").join("summary.md")
    }

    pub fn nemenyi_csv(&self) -> PathBuf {
        self.out.join("stats").join("nemenyi.csv")
    }

    pub fn bertscore_pairs(&self) -> PathBuf {
        self.out.join("bertscore_pairs.csv")
    }

    pub fn bertscore_hist(&self) -> PathBuf {
        self.out.join("bertscore_hist.csv")
    }

    pub fn diff_dir(&self, attacker: &str) -> PathBuf {
        self.out.join("diffs").join(sanitize_name(attacker))
    }

    pub fn report_json(&self) -> PathBuf {
        self.out.join("report.json")
    }

    pub fn report_md(&self) -> PathBuf {
        self.out.join("report.md")
    }
}
