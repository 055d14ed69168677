//! Consolidated run report: the accuracy matrix with drops, statistical
//! tests, semantic-preservation scores, and generation accounting, emitted
//! as JSON and Markdown.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::semsim::Histogram;
use crate::stats::{TestReport, WilcoxonOutcome};

use super::config::{EvaluationSet, RunConfig};

/// Per-attacker semantic-preservation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticSummary {
    pub attacker: String,
    pub pairs: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    /// Pairs skipped because one side had no tokens after preprocessing.
    pub skipped_pairs: usize,
    pub histogram: Histogram,
}

/// Per-attacker generation accounting. The means are the report fields for
/// per-transcript cost and latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub attacker: String,
    pub generations: usize,
    pub refusals: usize,
    pub total_cost_usd: f64,
    pub mean_cost_usd: f64,
    pub mean_latency_secs: f64,
    pub mean_prompt_tokens: f64,
    pub mean_completion_tokens: f64,
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub harness_version: String,
    pub generated_at: DateTime<Utc>,
    pub global_seed: u64,
    pub evaluation_set: EvaluationSet,
    pub classifiers: Vec<String>,
    pub attackers: Vec<String>,
    pub original_accuracy: Vec<f64>,
    /// Rows follow `classifiers`, columns follow `attackers`.
    pub adversarial_accuracy: Vec<Vec<f64>>,
    /// Column means of (original - adversarial), one per attacker.
    pub average_drops: Vec<f64>,
    /// Adversarial evaluation-set sizes per attacker (the accuracy
    /// denominators).
    pub evaluated_counts: Vec<usize>,
    pub stats: TestReport,
    pub semantics: Vec<SemanticSummary>,
    pub generation_stats: Vec<GenerationStats>,
    /// ROC point files under the run directory, relative paths.
    pub roc_files: Vec<String>,
    pub config_echo: RunConfig,
}

impl RunReport {
    /// The Markdown rendition of the report.
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Adversarial robustness run report\n\n");
        out.push_str(&format!("- harness version: {}\n", self.harness_version));
        out.push_str(&format!("- generated_at: {}\n", self.generated_at.to_rfc3339()));
        out.push_str(&format!("- global seed: {}\n", self.global_seed));
        out.push_str(&format!("- evaluation set: {:?}\n\n", self.evaluation_set));

        out.push_str("## Accuracy\n\n");
        out.push_str("| classifier | original |");
        for attacker in &self.attackers {
            out.push_str(&format!(" {attacker} |"));
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---|".repeat(self.attackers.len()));
        out.push('\n');
        for (i, classifier) in self.classifiers.iter().enumerate() {
            out.push_str(&format!("| {classifier} | {:.6} |", self.original_accuracy[i]));
            for j in 0..self.attackers.len() {
                out.push_str(&format!(" {:.6} |", self.adversarial_accuracy[i][j]));
            }
            out.push('\n');
        }
        out.push_str("| **average drop** | -- |");
        for drop in &self.average_drops {
            out.push_str(&format!(" {:.2}% |", drop * 100.0));
        }
        out.push('\n');
        out.push_str("| **wilcoxon p (one-tailed)** | -- |");
        for outcome in &self.stats.wilcoxon {
            match outcome {
                WilcoxonOutcome::Computed { result } => {
                    out.push_str(&format!(" {:.4} |", result.p_one_tailed))
                }
                WilcoxonOutcome::NoInformation => out.push_str(" no info |"),
            }
        }
        out.push('\n');
        if !self.stats.average_ranks.is_empty() {
            out.push_str("| **average rank** | -- |");
            for rank in &self.stats.average_ranks {
                out.push_str(&format!(" {rank} |"));
            }
            out.push('\n');
        }
        out.push('\n');

        out.push_str(&self.stats.render_markdown());

        out.push_str("\n## Semantic preservation\n\n");
        if self.semantics.is_empty() {
            out.push_str("(no scored pairs)\n");
        } else {
            out.push_str(
                "| attacker | pairs | mean precision | mean recall | mean F1 | skipped |\n\
                 |---|---|---|---|---|---|\n",
            );
            for s in &self.semantics {
                out.push_str(&format!(
                    "| {} | {} | {:.4} | {:.4} | {:.4} | {} |\n",
                    s.attacker, s.pairs, s.mean_precision, s.mean_recall, s.mean_f1,
                    s.skipped_pairs
                ));
            }
        }

        out.push_str("\n## Generation accounting\n\n");
        out.push_str(
            "| attacker | generations | refusals | total cost (USD) | mean cost | mean latency (s) | mean prompt tok | mean output tok |\n\
             |---|---|---|---|---|---|---|---|\n",
        );
        for g in &self.generation_stats {
            out.push_str(&format!(
                "| {} | {} | {} | {:.6} | {:.6} | {:.3} | {:.1} | {:.1} |\n",
                g.attacker,
                g.generations,
                g.refusals,
                g.total_cost_usd,
                g.mean_cost_usd,
                g.mean_latency_secs,
                g.mean_prompt_tokens,
                g.mean_completion_tokens
            ));
        }

        if !self.roc_files.is_empty() {
            out.push_str("\n## ROC point files\n\n");
            for f in &self.roc_files {
                out.push_str(&format!("- {f}\n"));
            }
        }
        out
    }
}

pub(super) fn semantic_summary(
    attacker: &str,
    scores: &[crate::semsim::PairScore],
    histogram: Histogram,
    skipped_pairs: usize,
) -> SemanticSummary {
    let n = scores.len().max(1) as f64;
    SemanticSummary {
        attacker: attacker.to_string(),
        pairs: scores.len(),
        mean_precision: scores.iter().map(|s| s.score.precision).sum::<f64>() / n,
        mean_recall: scores.iter().map(|s| s.score.recall).sum::<f64>() / n,
        mean_f1: scores.iter().map(|s| s.score.f1).sum::<f64>() / n,
        skipped_pairs,
        histogram,
    }
}

pub(super) fn generation_stats(
    attacker: &str,
    records: &[crate::attack::GenerationRecord],
) -> GenerationStats {
    let n = records.len().max(1) as f64;
    GenerationStats {
        attacker: attacker.to_string(),
        generations: records.len(),
        refusals: records.iter().filter(|r| r.refusal_flag).count(),
        total_cost_usd: records.iter().map(|r| r.cost_usd).sum(),
        mean_cost_usd: records.iter().map(|r| r.cost_usd).sum::<f64>() / n,
        mean_latency_secs: records.iter().map(|r| r.latency_secs).sum::<f64>() / n,
        mean_prompt_tokens: records.iter().map(|r| r.prompt_tokens as f64).sum::<f64>() / n,
        mean_completion_tokens: records.iter().map(|r| r.completion_tokens as f64).sum::<f64>()
            / n,
    }
}
