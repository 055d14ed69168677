//! End-to-end orchestration: prepare data, train the classifier suite, run
//! attacks, evaluate accuracy degradation and semantic preservation, run the
//! statistical tests, and emit the consolidated report.
//!
//! Each phase reads its inputs from and writes its artifacts to the run
//! directory, so the CLI can execute phases separately and an interrupted
//! run resumes from the generation cache.

pub mod config;
pub mod diff;
pub mod fixtures;
mod report;

pub use config::{
    AttackConfig, ClassifierConfig, CorpusConfig, EmbeddingConfig, EvaluationSet, ReportConfig,
    RunConfig, RunPaths, SplitConfig,
};
pub use diff::{diff_report, diff_tokens, DiffOp};
pub use report::{GenerationStats, RunReport, SemanticSummary};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::attack::{
    build_prompt, generate_batch, BatchOptions, GenerationCache, GenerationRecord,
};
use crate::classify::{train as train_classifier, TrainedClassifier};
use crate::corpus::{
    clean_text, read_corpus, read_jsonl, remove_stopwords, split_corpus, tokenize, write_jsonl,
    Corpus, Label, Source, StopList, TokenizerKind, Transcript,
};
use crate::metrics::{compute_metrics, roc_points, ConfusionCounts, EvalResult, RocPoint};
use crate::semsim::{
    histogram, score_corpus, EmbeddingProvider, FileProvider, HashProvider, HttpProvider,
    PairScore,
};
use crate::stats::{evaluate_accuracy_matrix, AccuracyMatrix, TestReport};
use crate::tfidf::{fit as fit_tfidf, transform, SparseFeatureVector, TfidfModel};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("[{phase}] {message}")]
    Phase { phase: &'static str, message: String },
}

/// Tags errors with the phase they occurred in.
#[derive(Clone, Copy)]
struct PhaseErr(&'static str);

impl PhaseErr {
    fn wrap<E: std::fmt::Display>(&self, e: E) -> PipelineError {
        PipelineError::Phase { phase: self.0, message: e.to_string() }
    }
}

/// Writes a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.flush()?;
    }
    std::fs::rename(&tmp, path)
}

// ------------------------------------------------------------- prepare

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub ingested: usize,
    pub dropped_duplicates: Vec<String>,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub empty_after_cleaning: usize,
}

fn load_stoplist(config: &RunConfig) -> Result<StopList, PipelineError> {
    match &config.corpus.stopwords {
        Some(path) => StopList::load(path).map_err(|e| PhaseErr("prepare").wrap(e)),
        None => Ok(StopList::empty()),
    }
}

/// Cleans, tokenizes, and stop-word-filters one text. `presupplied` carries
/// analyzer tokens for the passthrough tokenizer; generated text has none,
/// so passthrough falls back to whitespace there.
fn process_text(
    text: &str,
    presupplied: Option<&[String]>,
    config: &RunConfig,
    stoplist: &StopList,
) -> Result<Vec<String>, crate::corpus::CorpusError> {
    let cleaned = clean_text(text, &config.corpus.cleaning);
    let tokenizer = match (&config.corpus.tokenizer, presupplied) {
        (TokenizerKind::Passthrough, None) => &TokenizerKind::Whitespace,
        (kind, _) => kind,
    };
    let tokens = tokenize(&cleaned, tokenizer, presupplied)?;
    Ok(remove_stopwords(&tokens, stoplist))
}

/// Ingests the corpus, drops cleaned-text duplicates, materializes processed
/// tokens, splits, and writes `prepared/{train,val,test}.jsonl`.
pub fn phase_prepare(config: &RunConfig) -> Result<PrepareSummary, PipelineError> {
    let err = PhaseErr("prepare");
    let paths = RunPaths::new(&config.output_dir);
    let stoplist = load_stoplist(config)?;

    let corpus = read_corpus(&config.corpus.path).map_err(|e| err.wrap(e))?;
    let ingested = corpus.len();
    let (corpus, dropped_duplicates) = corpus.dedup_by_cleaned_text(&config.corpus.cleaning);

    let mut empty_after_cleaning = 0;
    let mut processed = Vec::with_capacity(corpus.len());
    for t in corpus.transcripts() {
        let tokens = process_text(&t.text, t.tokens.as_deref(), config, &stoplist).map_err(|e| err.wrap(e))?;
        if tokens.is_empty() {
            empty_after_cleaning += 1;
            log::warn!("transcript `{}` has no tokens after preprocessing", t.id);
        }
        processed.push(Transcript { tokens: Some(tokens), ..t.clone() });
    }
    let corpus = Corpus::new(processed).map_err(|e| err.wrap(e))?;

    let spec = config.split_spec();
    let (train, val, test) = split_corpus(&corpus, &spec).map_err(|e| err.wrap(e))?;
    for (name, split) in [("train", &train), ("val", &val), ("test", &test)] {
        let path = paths.prepared(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| err.wrap(e))?;
        }
        write_jsonl(split, &path).map_err(|e| err.wrap(e))?;
    }
    Ok(PrepareSummary {
        ingested,
        dropped_duplicates,
        train: train.len(),
        val: val.len(),
        test: test.len(),
        empty_after_cleaning,
    })
}

fn load_prepared(paths: &RunPaths, split: &str, phase: &'static str) -> Result<Corpus, PipelineError> {
    let path = paths.prepared(split);
    if !path.exists() {
        return Err(PipelineError::Phase {
            phase,
            message: format!("{} not found; run the prepare phase first", path.display()),
        });
    }
    read_jsonl(&path).map_err(|e| PhaseErr(phase).wrap(e))
}

fn stored_tokens<'a>(t: &'a Transcript, phase: &'static str) -> Result<&'a [String], PipelineError> {
    t.tokens.as_deref().ok_or_else(|| PipelineError::Phase {
        phase,
        message: format!("prepared transcript `{}` is missing tokens", t.id),
    })
}

// --------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub vocabulary_size: usize,
    pub classifiers: Vec<String>,
}

/// Fits TF-IDF on the training split and trains every configured
/// classifier, persisting all models.
pub fn phase_train(config: &RunConfig) -> Result<TrainSummary, PipelineError> {
    let err = PhaseErr("train");
    let paths = RunPaths::new(&config.output_dir);
    let train_set = load_prepared(&paths, "train", "train")?;

    let docs: Vec<Vec<String>> = train_set
        .transcripts()
        .iter()
        .map(|t| stored_tokens(t, "train").map(<[String]>::to_vec))
        .collect::<Result<_, _>>()?;
    let tfidf = fit_tfidf(&docs, config.tfidf).map_err(|e| err.wrap(e))?;
    if let Some(parent) = paths.tfidf_model().parent() {
        std::fs::create_dir_all(parent).map_err(|e| err.wrap(e))?;
    }
    tfidf.save(&paths.tfidf_model()).map_err(|e| err.wrap(e))?;

    let x_train: Vec<SparseFeatureVector> = docs.iter().map(|d| transform(d, &tfidf)).collect();
    let y_train: Vec<Label> = train_set.transcripts().iter().map(|t| t.label).collect();

    // Independent models may train in parallel; each is internally
    // deterministic.
    let specs = config.classifier_specs();
    let models: Vec<Result<(String, TrainedClassifier), PipelineError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .iter()
                .map(|(name, spec)| {
                    let x = &x_train;
                    let y = &y_train;
                    let name = name.clone();
                    let spec = *spec;
                    scope.spawn(move || {
                        train_classifier(spec, x, y)
                            .map(|m| (name.clone(), m))
                            .map_err(|e| PipelineError::Phase {
                                phase: "train",
                                message: format!("{name}: {e}"),
                            })
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training thread")).collect()
        });

    let mut names = Vec::new();
    for result in models {
        let (name, model) = result?;
        model.save(&paths.classifier_model(&name)).map_err(|e| err.wrap(e))?;
        names.push(name);
    }
    Ok(TrainSummary { vocabulary_size: tfidf.dimension(), classifiers: names })
}

// -------------------------------------------------------------- attack

#[derive(Debug, Clone, Default)]
pub struct AttackOptions {
    /// Run only this backend (by name).
    pub only_backend: Option<String>,
    pub concurrency_override: Option<usize>,
    pub cache_dir_override: Option<std::path::PathBuf>,
    /// Build and record prompts without generating.
    pub dry_run: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendRunSummary {
    pub attacker: String,
    pub generations: usize,
    pub cache_hits: usize,
    pub refusals: usize,
    pub total_cost_usd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSummary {
    pub targets: usize,
    pub dry_run: bool,
    pub backends: Vec<BackendRunSummary>,
}

fn attack_targets(test_set: &Corpus) -> Vec<&Transcript> {
    test_set.transcripts().iter().filter(|t| t.label == Label::Vishing).collect()
}

/// Builds combined prompts for the vishing test transcripts and drives the
/// configured backends through the generation cache. The merged
/// `generations.jsonl` is rebuilt from every configured backend's cache so
/// partial runs compose.
pub fn phase_attack(
    config: &RunConfig,
    options: &AttackOptions,
) -> Result<AttackSummary, PipelineError> {
    let err = PhaseErr("attack");
    let paths = RunPaths::new(&config.output_dir);
    let test_set = load_prepared(&paths, "test", "attack")?;
    let targets = attack_targets(&test_set);
    let template = config.template()?;
    let refusals = config.refusal_detector();

    let prompts: Vec<(String, String)> = targets
        .iter()
        .map(|t| build_prompt(&template, t).map(|p| (t.id.clone(), p)))
        .collect::<Result<_, _>>()
        .map_err(|e| err.wrap(e))?;

    if options.dry_run {
        let mut lines = String::new();
        for (id, prompt) in &prompts {
            let entry = serde_json::json!({
                "transcript_id": id,
                "prompt_hash": crate::attack::prompt_cache_key("dry-run", prompt, 0.0, 0),
                "prompt": prompt,
            });
            lines.push_str(&entry.to_string());
            lines.push('\n');
        }
        write_atomic(&paths.prompts(), &lines).map_err(|e| err.wrap(e))?;
        return Ok(AttackSummary { targets: targets.len(), dry_run: true, backends: Vec::new() });
    }

    let cache_dir = options.cache_dir_override.clone().unwrap_or_else(|| config.cache_dir());
    let batch = BatchOptions {
        concurrency: options.concurrency_override.unwrap_or(config.attack.concurrency),
    };

    let mut summaries = Vec::new();
    for spec in &config.attack.backends {
        if let Some(only) = &options.only_backend {
            if spec.name() != only {
                continue;
            }
        }
        let backend = spec.build(config.backend_seed(spec.name())).map_err(|e| err.wrap(e))?;
        let cache_path = cache_dir.join(format!("{}.jsonl", config::sanitize_name(spec.name())));
        let cache = GenerationCache::open(&cache_path).map_err(|e| err.wrap(e))?;
        let records =
            generate_batch(backend.as_ref(), &prompts, &refusals, Some(&cache), &batch)
                .map_err(|e| err.wrap(e))?;
        summaries.push(BackendRunSummary {
            attacker: spec.name().to_string(),
            generations: records.len(),
            cache_hits: records.iter().filter(|r| r.cached).count(),
            refusals: records.iter().filter(|r| r.refusal_flag).count(),
            total_cost_usd: records.iter().map(|r| r.cost_usd).sum(),
        });
    }

    if let Some(only) = &options.only_backend {
        if summaries.is_empty() {
            return Err(PipelineError::Phase {
                phase: "attack",
                message: format!("no configured backend named `{only}`"),
            });
        }
    }

    // Rebuild the merged log from every configured backend's cache, in
    // config order and prompt order, so the file is complete and stable.
    let mut merged = String::new();
    for spec in &config.attack.backends {
        let cache_path = cache_dir.join(format!("{}.jsonl", config::sanitize_name(spec.name())));
        if !cache_path.exists() {
            continue;
        }
        let cache = GenerationCache::open(&cache_path).map_err(|e| err.wrap(e))?;
        let backend = spec.build(config.backend_seed(spec.name())).map_err(|e| err.wrap(e))?;
        for (_, prompt) in &prompts {
            let key = crate::attack::prompt_cache_key(
                backend.model_name(),
                prompt,
                backend.temperature(),
                backend.max_output_tokens(),
            );
            if let Some(mut record) = cache.get(&key) {
                record.cached = false;
                merged.push_str(&serde_json::to_string(&record).expect("record serializes"));
                merged.push('\n');
            }
        }
    }
    write_atomic(&paths.generations(), &merged).map_err(|e| err.wrap(e))?;

    Ok(AttackSummary { targets: targets.len(), dry_run: false, backends: summaries })
}

/// Reads a generation log written by [`phase_attack`].
pub fn read_generation_log(path: &Path) -> Result<Vec<GenerationRecord>, PipelineError> {
    let err = PhaseErr("eval");
    let content = std::fs::read_to_string(path).map_err(|e| err.wrap(e))?;
    let mut records = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(line).map_err(|e| {
            PipelineError::Phase {
                phase: "eval",
                message: format!("{}:{}: {e}", path.display(), idx + 1),
            }
        })?;
        records.push(record);
    }
    Ok(records)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub classifiers: Vec<String>,
    pub attackers: Vec<String>,
    /// Adversarial evaluation-set sizes per attacker.
    pub evaluated_counts: Vec<usize>,
    pub semantics: Vec<SemanticSummary>,
}

fn build_embedding_provider(
    config: &RunConfig,
) -> Result<Box<dyn EmbeddingProvider>, PipelineError> {
    let err = PhaseErr("eval");
    match &config.embeddings {
        EmbeddingConfig::Hash { dimension, seed } => Ok(Box::new(HashProvider::new(
            seed.unwrap_or_else(|| config.embedding_seed()),
            *dimension,
        ))),
        EmbeddingConfig::File { path } => {
            Ok(Box::new(FileProvider::load(path, config.embedding_seed()).map_err(|e| err.wrap(e))?))
        }
        EmbeddingConfig::Http { base_url, dimension } => {
            Ok(Box::new(HttpProvider::new(base_url.clone(), *dimension).map_err(|e| err.wrap(e))?))
        }
    }
}

fn eval_csv(results: &[(String, EvalResult, usize)]) -> String {
    let mut out =
        String::from("classifier,precision,recall,accuracy,f1,tp,fp,tn,fn,n\n");
    for (name, r, n) in results {
        out.push_str(&format!(
            "{name},{:?},{:?},{:?},{:?},{},{},{},{},{n}\n",
            r.precision, r.recall, r.accuracy, r.f1, r.confusion.tp, r.confusion.fp,
            r.confusion.tn, r.confusion.fn_
        ));
    }
    out
}

fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in points {
        out.push_str(&format!("{:?},{:?},{:?}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

/// How many per-attacker diffs to materialize under `diffs/`.
const DIFF_SAMPLES: usize = 5;

/// Evaluates every classifier on the original test split and on each
/// attacker's generations, writes the accuracy matrix, per-set evaluation
/// tables, ROC points, semantic scores, and sample diffs.
pub fn phase_eval(config: &RunConfig) -> Result<EvalSummary, PipelineError> {
    let err = PhaseErr("eval");
    let paths = RunPaths::new(&config.output_dir);
    let test_set = load_prepared(&paths, "test", "eval")?;
    let stoplist = load_stoplist(config)?;

    let tfidf = TfidfModel::load(&paths.tfidf_model()).map_err(|e| err.wrap(e))?;
    let specs = config.classifier_specs();
    let mut models: Vec<(String, TrainedClassifier)> = Vec::with_capacity(specs.len());
    for (name, _) in &specs {
        let model = TrainedClassifier::load(&paths.classifier_model(name)).map_err(|e| err.wrap(e))?;
        models.push((name.clone(), model));
    }

    // Original test evaluation.
    let x_test: Vec<SparseFeatureVector> = test_set
        .transcripts()
        .iter()
        .map(|t| stored_tokens(t, "eval").map(|tok| transform(tok, &tfidf)))
        .collect::<Result<_, _>>()?;
    let y_test: Vec<Label> = test_set.transcripts().iter().map(|t| t.label).collect();

    let mut original_rows = Vec::new();
    let mut original_accuracy = Vec::new();
    for (name, model) in &models {
        let predictions = model.predict(&x_test).map_err(|e| err.wrap(e))?;
        let result =
            compute_metrics(ConfusionCounts::from_predictions(&predictions, &y_test))
                .map_err(|e| err.wrap(e))?;
        original_accuracy.push(result.accuracy);
        let scores = model.decision_score(&x_test).map_err(|e| err.wrap(e))?;
        match roc_points(&scores, &y_test) {
            Ok(points) => {
                write_atomic(&paths.roc("original", name), &roc_csv(&points)).map_err(|e| err.wrap(e))?
            }
            Err(e) => log::warn!("original ROC for {name} skipped: {e}"),
        }
        original_rows.push((name.clone(), result, y_test.len()));
    }
    write_atomic(&paths.eval_table("original"), &eval_csv(&original_rows)).map_err(|e| err.wrap(e))?;

    // Per-attacker adversarial evaluation.
    let generations = read_generation_log(&paths.generations())?;
    let mut by_attacker: BTreeMap<&str, Vec<&GenerationRecord>> = BTreeMap::new();
    for record in &generations {
        by_attacker.entry(record.attacker_id.as_str()).or_default().push(record);
    }

    let benign_originals: Vec<(usize, &Transcript)> = test_set
        .transcripts()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.label == Label::Benign)
        .collect();

    let provider = build_embedding_provider(config)?;
    let bin_width = config.report.bertscore_bin_width;

    let mut attackers = Vec::new();
    let mut evaluated_counts = Vec::new();
    let mut matrix_rows: Vec<Vec<f64>> = vec![Vec::new(); models.len()];
    let mut semantics = Vec::new();
    let mut pairs_csv =
        String::from("attacker,transcript_id,precision,recall,f1,fallback_tokens\n");
    let mut hist_csv = String::from("attacker,bin_lo,bin_hi,count\n");

    for spec in &config.attack.backends {
        let attacker = spec.name();
        let Some(records) = by_attacker.get(attacker) else {
            log::warn!("no generations found for backend `{attacker}`; skipping");
            continue;
        };
        let usable: Vec<&&GenerationRecord> =
            records.iter().filter(|r| !r.refusal_flag).collect();

        // Adversarial feature vectors, cleaned and tokenized like originals.
        let mut x_adv = Vec::with_capacity(usable.len());
        let mut adv_transcripts = Vec::with_capacity(usable.len());
        for record in &usable {
            let tokens =
                process_text(&record.output_text, None, config, &stoplist).map_err(|e| err.wrap(e))?;
            x_adv.push(transform(&tokens, &tfidf));
            adv_transcripts.push(Transcript {
                id: record.transcript_id.clone(),
                text: record.output_text.clone(),
                label: Label::Vishing,
                tokens: Some(tokens),
                source: Source::Adversarial { attacker_id: attacker.to_string() },
            });
        }

        // Evaluation set composition.
        let (x_eval, y_eval): (Vec<SparseFeatureVector>, Vec<Label>) =
            match config.attack.evaluation_set {
                EvaluationSet::VishingOnly => {
                    (x_adv.clone(), vec![Label::Vishing; x_adv.len()])
                }
                EvaluationSet::MixedWithBenign => {
                    let mut x = x_adv.clone();
                    let mut y = vec![Label::Vishing; x_adv.len()];
                    for (idx, t) in &benign_originals {
                        x.push(x_test[*idx].clone());
                        y.push(t.label);
                    }
                    (x, y)
                }
            };

        if x_eval.is_empty() {
            log::warn!("attacker `{attacker}` has no usable generations; skipping");
            continue;
        }

        let mut eval_rows = Vec::new();
        for ((name, model), matrix_row) in models.iter().zip(matrix_rows.iter_mut()) {
            let predictions = model.predict(&x_eval).map_err(|e| err.wrap(e))?;
            let result =
                compute_metrics(ConfusionCounts::from_predictions(&predictions, &y_eval))
                    .map_err(|e| err.wrap(e))?;
            matrix_row.push(result.accuracy);
            eval_rows.push((name.clone(), result, y_eval.len()));

            // ROC needs both classes: adversarial vishing plus benign
            // originals, whatever the accuracy composition was.
            let mut x_roc = x_adv.clone();
            let mut y_roc = vec![Label::Vishing; x_adv.len()];
            for (idx, t) in &benign_originals {
                x_roc.push(x_test[*idx].clone());
                y_roc.push(t.label);
            }
            let scores = model.decision_score(&x_roc).map_err(|e| err.wrap(e))?;
            match roc_points(&scores, &y_roc) {
                Ok(points) => write_atomic(&paths.roc(attacker, name), &roc_csv(&points))
                    .map_err(|e| err.wrap(e))?,
                Err(e) => log::warn!("ROC for {attacker}/{name} skipped: {e}"),
            }
        }
        write_atomic(&paths.eval_table(attacker), &eval_csv(&eval_rows)).map_err(|e| err.wrap(e))?;

        // Semantic preservation on processed tokens; pairs where either
        // side lost all tokens are skipped and counted.
        let mut scorable: Vec<(Transcript, Transcript)> = Vec::new();
        let mut skipped_pairs = 0;
        for adv in &adv_transcripts {
            let original = test_set.get(&adv.id).ok_or_else(|| PipelineError::Phase {
                phase: "eval",
                message: format!("generation for unknown transcript `{}`", adv.id),
            })?;
            let empty = |t: &Transcript| t.tokens.as_deref().is_none_or(|tok| tok.is_empty());
            if empty(original) || empty(adv) {
                skipped_pairs += 1;
                continue;
            }
            scorable.push((original.clone(), adv.clone()));
        }
        let tokenizer = |t: &Transcript| t.tokens.clone().unwrap_or_default();
        let (scores, hist) =
            score_corpus(&scorable, provider.as_ref(), tokenizer, bin_width).map_err(|e| err.wrap(e))?;
        for s in &scores {
            pairs_csv.push_str(&format!(
                "{attacker},{},{:?},{:?},{:?},{}\n",
                s.transcript_id, s.score.precision, s.score.recall, s.score.f1, s.fallback_count
            ));
        }
        for (lo, count) in &hist.bins {
            hist_csv.push_str(&format!("{attacker},{:?},{:?},{count}\n", lo, lo + bin_width));
        }
        semantics.push(report::semantic_summary(attacker, &scores, hist, skipped_pairs));

        // Sample side-by-side diffs.
        let diff_dir = paths.diff_dir(attacker);
        for (original, adv) in scorable.iter().take(DIFF_SAMPLES) {
            let rendered = diff_report(original, adv)?;
            let path = diff_dir.join(format!("{}.txt", config::sanitize_name(&original.id)));
            write_atomic(&path, &rendered).map_err(|e| err.wrap(e))?;
        }

        attackers.push(attacker.to_string());
        evaluated_counts.push(y_eval.len());
    }

    let classifier_names: Vec<String> = models.iter().map(|(n, _)| n.clone()).collect();
    let matrix = AccuracyMatrix::new(
        classifier_names.clone(),
        attackers.clone(),
        Some(original_accuracy),
        matrix_rows,
    )
    .map_err(|e| err.wrap(e))?;
    if let Some(parent) = paths.accuracy_matrix().parent() {
        std::fs::create_dir_all(parent).map_err(|e| err.wrap(e))?;
    }
    matrix.write_csv(&paths.accuracy_matrix()).map_err(|e| err.wrap(e))?;
    write_atomic(&paths.bertscore_pairs(), &pairs_csv).map_err(|e| err.wrap(e))?;
    write_atomic(&paths.bertscore_hist(), &hist_csv).map_err(|e| err.wrap(e))?;

    Ok(EvalSummary { classifiers: classifier_names, attackers, evaluated_counts, semantics })
}

// --------------------------------------------------------------- stats

/// Runs the statistical suite over an accuracy matrix CSV (the stats-only
/// entry point when `matrix_override` is given) and writes the test report,
/// Markdown summary, and Nemenyi CSV.
pub fn phase_stats(
    config: &RunConfig,
    matrix_override: Option<&Path>,
) -> Result<TestReport, PipelineError> {
    let err = PhaseErr("stats");
    let paths = RunPaths::new(&config.output_dir);
    let matrix_path = matrix_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| paths.accuracy_matrix());
    let matrix = AccuracyMatrix::read_csv(&matrix_path).map_err(|e| err.wrap(e))?;
    let report = evaluate_accuracy_matrix(&matrix).map_err(|e| err.wrap(e))?;

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&paths.stats_report(), &(json + "\n")).map_err(|e| err.wrap(e))?;
    write_atomic(&paths.stats_summary(), &report.render_markdown()).map_err(|e| err.wrap(e))?;
    if let Some(csv) = report.nemenyi_csv() {
        write_atomic(&paths.nemenyi_csv(), &csv).map_err(|e| err.wrap(e))?;
    }
    Ok(report)
}

// -------------------------------------------------------------- report

/// Assembles the consolidated report from the run directory's artifacts and
/// writes `report.json` and `report.md`.
pub fn phase_report(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let err = PhaseErr("report");
    let paths = RunPaths::new(&config.output_dir);

    let matrix = AccuracyMatrix::read_csv(&paths.accuracy_matrix()).map_err(|e| err.wrap(e))?;
    let original_accuracy = matrix.original.clone().ok_or_else(|| PipelineError::Phase {
        phase: "report",
        message: "accuracy matrix lacks the original column".into(),
    })?;
    let stats: TestReport = {
        let json = std::fs::read_to_string(paths.stats_report()).map_err(|e| err.wrap(e))?;
        serde_json::from_str(&json).map_err(|e| err.wrap(e))?
    };

    let n = matrix.n_classifiers() as f64;
    let average_drops: Vec<f64> = (0..matrix.n_attackers())
        .map(|j| {
            matrix
                .column(j)
                .iter()
                .zip(&original_accuracy)
                .map(|(adv, orig)| orig - adv)
                .sum::<f64>()
                / n
        })
        .collect();

    let generations = read_generation_log(&paths.generations())?;
    let mut by_attacker: BTreeMap<&str, Vec<GenerationRecord>> = BTreeMap::new();
    for record in &generations {
        by_attacker.entry(record.attacker_id.as_str()).or_default().push(record.clone());
    }
    let generation_stats: Vec<GenerationStats> = matrix
        .attackers
        .iter()
        .map(|attacker| {
            report::generation_stats(
                attacker,
                by_attacker.get(attacker.as_str()).map_or(&[][..], Vec::as_slice),
            )
        })
        .collect();

    let mut semantics =
        read_semantics(&paths, &matrix.attackers, config.report.bertscore_bin_width)?;
    for summary in &mut semantics {
        let usable = by_attacker
            .get(summary.attacker.as_str())
            .map_or(0, |records| records.iter().filter(|r| !r.refusal_flag).count());
        summary.skipped_pairs = usable.saturating_sub(summary.pairs);
    }

    let evaluated_counts: Vec<usize> = matrix
        .attackers
        .iter()
        .map(|attacker| eval_table_count(&paths, attacker))
        .collect::<Result<_, _>>()?;

    let mut roc_files = Vec::new();
    let roc_dir = paths.out().join("roc");
    if roc_dir.exists() {
        let mut entries: Vec<String> = std::fs::read_dir(&roc_dir)
            .map_err(|e| err.wrap(e))?
            .filter_map(|e| e.ok())
            .map(|e| format!("roc/{}", e.file_name().to_string_lossy()))
            .collect();
        entries.sort();
        roc_files = entries;
    }

    let report = RunReport {
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at: chrono::Utc::now(),
        global_seed: config.global_seed,
        evaluation_set: config.attack.evaluation_set,
        classifiers: matrix.classifiers.clone(),
        attackers: matrix.attackers.clone(),
        original_accuracy,
        adversarial_accuracy: matrix.adversarial.clone(),
        average_drops,
        evaluated_counts,
        stats,
        semantics,
        generation_stats,
        roc_files,
        config_echo: config.clone(),
    };

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&paths.report_json(), &(json + "\n")).map_err(|e| err.wrap(e))?;
    write_atomic(&paths.report_md(), &report.render_markdown()).map_err(|e| err.wrap(e))?;
    Ok(report)
}

/// Evaluation-set size from an eval table's `n` column (first data row).
fn eval_table_count(paths: &RunPaths, attacker: &str) -> Result<usize, PipelineError> {
    let path = paths.eval_table(attacker);
    let content = std::fs::read_to_string(&path).map_err(|e| PipelineError::Phase {
        phase: "report",
        message: format!("{}: {e}", path.display()),
    })?;
    content
        .lines()
        .nth(1)
        .and_then(|row| row.rsplit(',').next())
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| PipelineError::Phase {
            phase: "report",
            message: format!("{}: missing n column", path.display()),
        })
}

/// Rebuilds per-attacker semantic summaries from `bertscore_pairs.csv`.
fn read_semantics(
    paths: &RunPaths,
    attackers: &[String],
    bin_width: f64,
) -> Result<Vec<SemanticSummary>, PipelineError> {
    let path = paths.bertscore_pairs();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let err = PhaseErr("report");
    let content = std::fs::read_to_string(&path).map_err(|e| err.wrap(e))?;
    let mut per_attacker: BTreeMap<&str, Vec<PairScore>> = BTreeMap::new();
    for line in content.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(PipelineError::Phase {
                phase: "report",
                message: format!("malformed bertscore row: {line}"),
            });
        }
        let parse = |v: &str| -> Result<f64, PipelineError> {
            v.parse().map_err(|e| PipelineError::Phase {
                phase: "report",
                message: format!("bad number `{v}`: {e}"),
            })
        };
        per_attacker.entry(fields[0]).or_default().push(PairScore {
            transcript_id: fields[1].to_string(),
            score: crate::semsim::SemScore {
                precision: parse(fields[2])?,
                recall: parse(fields[3])?,
                f1: parse(fields[4])?,
            },
            fallback_count: fields[5].parse().unwrap_or(0),
        });
    }
    Ok(attackers
        .iter()
        .filter_map(|attacker| {
            per_attacker.get(attacker.as_str()).map(|scores| {
                let f1s: Vec<f64> = scores.iter().map(|s| s.score.f1).collect();
                report::semantic_summary(attacker, scores, histogram(&f1s, bin_width), 0)
            })
        })
        .collect())
}

// ------------------------------------------------------------------ run

/// Executes every phase in order and returns the consolidated report.
pub fn run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    phase_prepare(config)?;
    phase_train(config)?;
    phase_attack(config, &AttackOptions::default())?;
    phase_eval(config)?;
    phase_stats(config, None)?;
    phase_report(config)
}
