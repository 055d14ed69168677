//! Bundled reference accuracy fixtures for the offline replay entry point.
//!
//! Two fixture sets ship with the harness: a 10-classifier x 4-attacker
//! adversarial accuracy matrix with matching original accuracies, and a
//! single-attacker full-dataset comparison with its reported drop column.
//! Replaying them exercises every derived statistic (average drops, Wilcoxon,
//! ranks, Friedman, Nemenyi) without training or network access.

use serde::Serialize;

use crate::metrics::accuracy_drop;
use crate::stats::{evaluate_accuracy_matrix, AccuracyMatrix, StatsError, TestReport};

pub const CLASSIFIER_NAMES: [&str; 10] = [
    "LogisticRegression",
    "DecisionTree",
    "RandomForest",
    "AdaBoost",
    "GradientBoosting",
    "HistGradientBoosting",
    "XGB",
    "LGBM",
    "CatBoost",
    "LinearSVC",
];

pub const ATTACKER_NAMES: [&str; 4] = ["MiniGPT-4o", "GPT-4o", "Gemini 2.0", "Qwen2.5"];

/// Accuracy of each classifier on the original test transcripts.
pub const ORIGINAL_ACCURACY: [f64; 10] = [
    0.991803, 0.950820, 0.987705, 0.983607, 0.954918, 0.979508, 0.979508, 0.983607, 0.959016,
    0.995902,
];

/// Adversarial accuracies: rows follow [`CLASSIFIER_NAMES`], columns follow
/// [`ATTACKER_NAMES`].
pub const ADVERSARIAL_ACCURACY: [[f64; 4]; 10] = [
    [0.958904, 0.760274, 0.773973, 0.623288],
    [0.890411, 0.726027, 0.856164, 0.458904],
    [0.986301, 0.979452, 0.986301, 0.732877],
    [0.945205, 0.883562, 0.938356, 0.630137],
    [0.815068, 0.623288, 0.842466, 0.445205],
    [0.986301, 0.849315, 0.958904, 0.801370],
    [0.952055, 0.876712, 0.952055, 0.746575],
    [0.986301, 0.808219, 0.965753, 0.726027],
    [0.945205, 0.856164, 0.958904, 0.561644],
    [0.958904, 0.787671, 0.815068, 0.657534],
];

/// Full-dataset single-attacker comparison: (classifier, original accuracy,
/// adversarial accuracy, reported drop).
pub const FULL_DATASET_ROWS: [(&str, f64, f64, f64); 10] = [
    ("LogisticRegression", 0.991803, 0.763547, 0.228256),
    ("DecisionTreeClassifier", 0.950820, 0.745484, 0.205336),
    ("RandomForestClassifier", 0.987705, 0.958949, 0.028756),
    ("AdaBoostClassifier", 0.983607, 0.834154, 0.149453),
    ("GradientBoostingClassifier", 0.954918, 0.645320, 0.309598),
    ("HistGradientBoostingClassifier", 0.979508, 0.857143, 0.122365),
    ("XGBClassifier", 0.979508, 0.844007, 0.135501),
    ("LGBMClassifier", 0.983607, 0.862069, 0.121538),
    ("CatBoostClassifier", 0.959016, 0.844007, 0.115009),
    ("LinearSVC", 0.995902, 0.779967, 0.215935),
];

/// The adversarial matrix as owned rows.
pub fn adversarial_accuracy_matrix() -> Vec<Vec<f64>> {
    ADVERSARIAL_ACCURACY.iter().map(|row| row.to_vec()).collect()
}

/// The multi-attacker fixture as an [`AccuracyMatrix`].
pub fn reference_matrix() -> AccuracyMatrix {
    AccuracyMatrix::new(
        CLASSIFIER_NAMES.iter().map(|s| s.to_string()).collect(),
        ATTACKER_NAMES.iter().map(|s| s.to_string()).collect(),
        Some(ORIGINAL_ACCURACY.to_vec()),
        adversarial_accuracy_matrix(),
    )
    .expect("fixture dimensions are consistent")
}

/// One full-dataset row, recomputed drop alongside the reported one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullDatasetRow {
    pub classifier: String,
    pub original: f64,
    pub adversarial: f64,
    pub reported_drop: f64,
    pub recomputed_drop: f64,
}

/// Everything the replay entry point produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureReplay {
    pub classifiers: Vec<String>,
    pub attackers: Vec<String>,
    pub original_accuracy: Vec<f64>,
    pub adversarial_accuracy: Vec<Vec<f64>>,
    /// Column means of (original - adversarial), one per attacker.
    pub average_drops: Vec<f64>,
    pub report: TestReport,
    pub full_dataset: Vec<FullDatasetRow>,
}

/// Replays the bundled fixtures through the statistics pipeline.
pub fn replay() -> Result<FixtureReplay, StatsError> {
    let matrix = reference_matrix();
    let report = evaluate_accuracy_matrix(&matrix)?;
    let n = matrix.n_classifiers() as f64;
    let average_drops: Vec<f64> = (0..matrix.n_attackers())
        .map(|j| {
            matrix
                .column(j)
                .iter()
                .zip(&ORIGINAL_ACCURACY)
                .map(|(adv, orig)| accuracy_drop(*orig, *adv))
                .sum::<f64>()
                / n
        })
        .collect();
    let full_dataset = FULL_DATASET_ROWS
        .iter()
        .map(|(name, orig, adv, drop)| FullDatasetRow {
            classifier: name.to_string(),
            original: *orig,
            adversarial: *adv,
            reported_drop: *drop,
            recomputed_drop: accuracy_drop(*orig, *adv),
        })
        .collect();
    Ok(FixtureReplay {
        classifiers: matrix.classifiers.clone(),
        attackers: matrix.attackers.clone(),
        original_accuracy: ORIGINAL_ACCURACY.to_vec(),
        adversarial_accuracy: adversarial_accuracy_matrix(),
        average_drops,
        report,
        full_dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_drops_match_reported_percentages() {
        let replay = replay().unwrap();
        let expected = [0.0342, 0.1616, 0.0718, 0.3383];
        for (got, want) in replay.average_drops.iter().zip(expected) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn full_dataset_drop_column_is_consistent() {
        for row in replay().unwrap().full_dataset {
            assert!(
                (row.reported_drop - row.recomputed_drop).abs() < 1e-6,
                "{}: {} vs {}",
                row.classifier,
                row.reported_drop,
                row.recomputed_drop
            );
        }
    }
}
