//! Binary classification metrics, accuracy drop, and ROC/AUC data.
//!
//! Vishing is the positive class throughout.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("empty confusion matrix: no observations")]
    EmptyConfusion,
    #[error("ROC requires both classes; got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
}

/// Confusion counts with Vishing as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Tallies counts from aligned prediction/truth slices.
    pub fn from_predictions(predicted: &[Label], actual: &[Label]) -> Self {
        let mut c = ConfusionCounts::default();
        for (p, a) in predicted.iter().zip(actual) {
            match (p, a) {
                (Label::Vishing, Label::Vishing) => c.tp += 1,
                (Label::Vishing, Label::Benign) => c.fp += 1,
                (Label::Benign, Label::Benign) => c.tn += 1,
                (Label::Benign, Label::Vishing) => c.fn_ += 1,
            }
        }
        c
    }
}

/// Precision/recall for one class treated as positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full metric set for one evaluation.
///
/// Zero-denominator precision or recall is reported as 0 with the
/// corresponding `*_undefined` flag set, so batch evaluation never aborts on
/// a degenerate classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub confusion: ConfusionCounts,
    pub vishing: ClassMetrics,
    pub benign: ClassMetrics,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Computes precision, recall, accuracy, and F1 from confusion counts.
pub fn compute_metrics(confusion: ConfusionCounts) -> Result<EvalResult, MetricError> {
    if confusion.total() == 0 {
        return Err(MetricError::EmptyConfusion);
    }
    let (precision, precision_undefined) = ratio(confusion.tp, confusion.tp + confusion.fp);
    let (recall, recall_undefined) = ratio(confusion.tp, confusion.tp + confusion.fn_);
    let accuracy = (confusion.tp + confusion.tn) as f64 / confusion.total() as f64;
    let f1 = harmonic(precision, recall);

    // Per-class view: Benign metrics come from the transposed confusion.
    let (bp, _) = ratio(confusion.tn, confusion.tn + confusion.fn_);
    let (br, _) = ratio(confusion.tn, confusion.tn + confusion.fp);
    let vishing = ClassMetrics {
        precision,
        recall,
        f1,
        support: confusion.tp + confusion.fn_,
    };
    let benign = ClassMetrics {
        precision: bp,
        recall: br,
        f1: harmonic(bp, br),
        support: confusion.tn + confusion.fp,
    };

    Ok(EvalResult {
        precision,
        recall,
        accuracy,
        f1,
        precision_undefined,
        recall_undefined,
        confusion,
        vishing,
        benign,
    })
}

/// Original minus adversarial accuracy. Negative when the attack helped the
/// classifier.
pub fn accuracy_drop(original_acc: f64, adversarial_acc: f64) -> f64 {
    original_acc - adversarial_acc
}

/// One ROC point; thresholds descend from the first point after (0,0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold that produced this point; +inf for the (0,0) anchor.
    pub threshold: f64,
}

/// Computes ROC points from decision scores (higher = more vishing-like).
///
/// Tied scores are grouped at a single threshold. Points run from (0,0) to
/// (1,1) sorted by descending threshold.
pub fn roc_points(scores: &[f64], labels: &[Label]) -> Result<Vec<RocPoint>, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l == Label::Vishing).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass { positives, negatives });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            match labels[order[i]] {
                Label::Vishing => tp += 1,
                Label::Benign => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    Ok(points)
}

/// Area under an ROC curve by the trapezoidal rule.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Convenience: ROC then trapezoidal area.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64, MetricError> {
    Ok(auc(&roc_points(scores, labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label::{Benign as B, Vishing as V};

    #[test]
    fn perfect_classifier_scores_ones() {
        let r = compute_metrics(ConfusionCounts { tp: 5, fp: 0, tn: 5, fn_: 0 }).unwrap();
        assert_eq!((r.precision, r.recall, r.accuracy, r.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_computed_confusion() {
        let r = compute_metrics(ConfusionCounts { tp: 50, fp: 10, tn: 40, fn_: 0 }).unwrap();
        assert!((r.precision - 50.0 / 60.0).abs() < 1e-12);
        assert!((r.recall - 1.0).abs() < 1e-12);
        assert!((r.accuracy - 0.9).abs() < 1e-12);
        assert!((r.f1 - 0.909090909090909).abs() < 1e-12);
    }

    #[test]
    fn accuracy_matches_published_fraction_of_244() {
        // 243 of 244 correct
        let r = compute_metrics(ConfusionCounts { tp: 121, fp: 1, tn: 122, fn_: 0 }).unwrap();
        assert!((r.accuracy - 0.995902).abs() < 1e-6);
    }

    #[test]
    fn zero_denominators_flag_instead_of_error() {
        let r = compute_metrics(ConfusionCounts { tp: 0, fp: 0, tn: 3, fn_: 2 }).unwrap();
        assert_eq!(r.precision, 0.0);
        assert!(r.precision_undefined);
        assert!(!r.recall_undefined);
        assert!(matches!(
            compute_metrics(ConfusionCounts::default()),
            Err(MetricError::EmptyConfusion)
        ));
    }

    #[test]
    fn accuracy_equals_mean_correctness() {
        let predicted = [V, B, V, V, B, B, V];
        let actual = [V, V, V, B, B, B, B];
        let confusion = ConfusionCounts::from_predictions(&predicted, &actual);
        let r = compute_metrics(confusion).unwrap();
        let mean = predicted
            .iter()
            .zip(&actual)
            .map(|(p, a)| if p == a { 1.0 } else { 0.0 })
            .sum::<f64>()
            / predicted.len() as f64;
        assert!((r.accuracy - mean).abs() < 1e-12);
    }

    #[test]
    fn drop_arithmetic() {
        assert!((accuracy_drop(0.954918, 0.645320) - 0.309598).abs() < 1e-12);
        assert_eq!(accuracy_drop(0.5, 0.5), 0.0);
        assert!((accuracy_drop(0.979508, 0.986301) - (-0.006793)).abs() < 1e-12);
    }

    #[test]
    fn roc_perfect_ranking_has_unit_area() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [V, V, B, B];
        assert!((roc_auc(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roc_interleaved_ranking() {
        let scores = [0.9, 0.6, 0.4, 0.1];
        let labels = [V, B, V, B];
        assert!((roc_auc(&scores, &labels).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn roc_all_tied_scores_is_chance() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let labels = [V, V, B, B];
        let points = roc_points(&scores, &labels).unwrap();
        assert_eq!(points.len(), 2); // (0,0) then the single tie group at (1,1)
        assert!((auc(&points) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn roc_endpoints_and_monotonicity() {
        let scores = [0.9, 0.7, 0.7, 0.3, 0.2, 0.1];
        let labels = [V, B, V, V, B, B];
        let points = roc_points(&scores, &labels).unwrap();
        let first = points.first().unwrap();
        let last = points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            assert!(w[1].threshold < w[0].threshold);
        }
    }

    #[test]
    fn roc_rejects_single_class() {
        assert!(matches!(
            roc_points(&[0.1, 0.2], &[V, V]),
            Err(MetricError::SingleClass { .. })
        ));
    }

    /// Mann-Whitney oracle: AUC equals the fraction of concordant
    /// positive/negative pairs with ties counted half.
    #[test]
    fn auc_equals_mann_whitney_statistic() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(4..20);
            let scores: Vec<f64> =
                (0..n).map(|_| (rng.gen_range(0..8) as f64) / 8.0).collect();
            let labels: Vec<Label> =
                (0..n).map(|i| if i < n / 2 { V } else { B }).collect();
            let auc_value = roc_auc(&scores, &labels).unwrap();

            let mut concordant = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == V && labels[j] == B {
                        pairs += 1.0;
                        if scores[i] > scores[j] {
                            concordant += 1.0;
                        } else if scores[i] == scores[j] {
                            concordant += 0.5;
                        }
                    }
                }
            }
            assert!((auc_value - concordant / pairs).abs() < 1e-10);
        }
    }
}
