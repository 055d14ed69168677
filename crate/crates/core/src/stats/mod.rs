//! Nonparametric statistics over classifier-by-attacker accuracy matrices:
//! exact one-tailed Wilcoxon signed-rank tests, mid-rank matrices, the
//! tie-corrected Friedman test, and Nemenyi post-hoc p-values from the
//! studentized-range distribution.

pub mod dist;
mod friedman;
mod matrix;
mod nemenyi;
mod ranking;
mod wilcoxon;

pub use friedman::{friedman, FriedmanResult};
pub use matrix::AccuracyMatrix;
pub use nemenyi::{nemenyi, NemenyiMatrix};
pub use ranking::{rank_rows, RankMatrix};
pub use wilcoxon::{wilcoxon_one_tailed, ExactTail, PairedSample, WilcoxonResult, EXACT_LIMIT};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no information: every paired difference is zero")]
    NoInformation,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("NaN in input")]
    NanInput,
    #[error("input error: {0}")]
    Input(String),
}

/// Wilcoxon outcome for one attacker; the identity attack produces all-zero
/// differences and is reported rather than swallowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WilcoxonOutcome {
    Computed {
        #[serde(flatten)]
        result: WilcoxonResult,
    },
    NoInformation,
}

/// Consolidated statistical test report for one accuracy matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub attackers: Vec<String>,
    /// Per-attacker one-tailed Wilcoxon tests against the original
    /// accuracies; empty when the matrix has no original column.
    pub wilcoxon: Vec<WilcoxonOutcome>,
    /// Column-average mid-ranks (rank 1 = strongest attack).
    pub average_ranks: Vec<f64>,
    pub friedman: Option<FriedmanResult>,
    pub nemenyi: Option<NemenyiMatrix>,
    /// Human-readable notes for skipped sections.
    pub notes: Vec<String>,
}

/// Runs the full statistical pipeline over an accuracy matrix.
///
/// Wilcoxon runs per attacker when original accuracies are present; the
/// Friedman and Nemenyi stages need at least two classifiers and two
/// attackers, and are skipped with a note otherwise.
pub fn evaluate_accuracy_matrix(matrix: &AccuracyMatrix) -> Result<TestReport, StatsError> {
    let mut notes = Vec::new();

    let mut wilcoxon_outcomes = Vec::new();
    match &matrix.original {
        Some(original) => {
            for (j, attacker) in matrix.attackers.iter().enumerate() {
                let sample = PairedSample::new(original.clone(), matrix.column(j))?;
                match wilcoxon_one_tailed(&sample) {
                    Ok(result) => wilcoxon_outcomes.push(WilcoxonOutcome::Computed { result }),
                    Err(StatsError::NoInformation) => {
                        notes.push(format!(
                            "wilcoxon[{attacker}]: no nonzero accuracy differences"
                        ));
                        wilcoxon_outcomes.push(WilcoxonOutcome::NoInformation);
                    }
                    Err(other) => return Err(other),
                }
            }
        }
        None => notes.push("wilcoxon skipped: no original accuracy column".into()),
    }

    let (average_ranks, friedman_result, nemenyi_result) = if matrix.n_attackers() < 2 {
        notes.push("ranking skipped: fewer than 2 attackers".into());
        (Vec::new(), None, None)
    } else {
        let rm = rank_rows(&matrix.adversarial)?;
        let friedman_result = match friedman(&rm) {
            Ok(r) => Some(r),
            Err(StatsError::InsufficientData(msg)) => {
                notes.push(format!("friedman skipped: {msg}"));
                None
            }
            Err(other) => return Err(other),
        };
        let nemenyi_result = match nemenyi(&rm) {
            Ok(m) => Some(m),
            Err(StatsError::InsufficientData(msg)) => {
                notes.push(format!("nemenyi skipped: {msg}"));
                None
            }
            Err(other) => return Err(other),
        };
        (rm.average_ranks().to_vec(), friedman_result, nemenyi_result)
    };

    Ok(TestReport {
        attackers: matrix.attackers.clone(),
        wilcoxon: wilcoxon_outcomes,
        average_ranks,
        friedman: friedman_result,
        nemenyi: nemenyi_result,
        notes,
    })
}

impl TestReport {
    /// Markdown summary table covering every section that ran.
    pub fn render_markdown(&self) -> String {
        let mut out = String::from("## Statistical tests\n\n");

        if !self.wilcoxon.is_empty() {
            out.push_str("| attacker | W- | n_eff | one-tailed p |\n|---|---|---|---|\n");
            for (attacker, outcome) in self.attackers.iter().zip(&self.wilcoxon) {
                match outcome {
                    WilcoxonOutcome::Computed { result } => out.push_str(&format!(
                        "| {attacker} | {} | {} | {:.6} |\n",
                        result.w_minus, result.n_effective, result.p_one_tailed
                    )),
                    WilcoxonOutcome::NoInformation => out.push_str(&format!(
                        "| {attacker} | - | 0 | no information |\n"
                    )),
                }
            }
            out.push('\n');
        }

        if !self.average_ranks.is_empty() {
            out.push_str("| attacker | average rank |\n|---|---|\n");
            for (attacker, rank) in self.attackers.iter().zip(&self.average_ranks) {
                out.push_str(&format!("| {attacker} | {rank} |\n"));
            }
            out.push('\n');
        }

        if let Some(f) = &self.friedman {
            out.push_str(&format!(
                "Friedman: chi2 = {:.4} (uncorrected {:.4}), df = {}, p = {:.6e}\n\n",
                f.chi2, f.chi2_uncorrected, f.df, f.p
            ));
        }

        if let Some(m) = &self.nemenyi {
            out.push_str("Nemenyi pairwise p-values:\n\n");
            out.push_str("| vs |");
            for attacker in &self.attackers {
                out.push_str(&format!(" {attacker} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(self.attackers.len()));
            out.push('\n');
            for (i, attacker) in self.attackers.iter().enumerate() {
                out.push_str(&format!("| {attacker} |"));
                for j in 0..self.attackers.len() {
                    out.push_str(&format!(" {:.4} |", m.p[i][j]));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        for note in &self.notes {
            out.push_str(&format!("- note: {note}\n"));
        }
        out
    }

    /// Nemenyi matrix as CSV (heatmap-ready), or None when it was skipped.
    pub fn nemenyi_csv(&self) -> Option<String> {
        let m = self.nemenyi.as_ref()?;
        let mut out = String::from("attacker");
        for attacker in &self.attackers {
            out.push(',');
            out.push_str(attacker);
        }
        out.push('\n');
        for (i, attacker) in self.attackers.iter().enumerate() {
            out.push_str(attacker);
            for j in 0..self.attackers.len() {
                out.push_str(&format!(",{:?}", m.p[i][j]));
            }
            out.push('\n');
        }
        Some(out)
    }
}
