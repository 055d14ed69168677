//! Boosting classifiers: AdaBoost over decision stumps and gradient
//! boosting with logistic loss over depth-limited regression trees.

use serde::{Deserialize, Serialize};

use crate::tfidf::SparseFeatureVector;

use super::linear::sigmoid;
use super::tree::{fit_tree, ColumnMatrix, FittedTree, Tree, TreeConfig, TreeTask};

/// Training predictions read straight off the fitted tree's leaf membership.
fn leaf_predictions(fitted: &FittedTree, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (leaf_idx, rows) in fitted.leaf_rows.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let value = fitted.tree.predict_value_at_leaf(leaf_idx);
        for &r in rows {
            out[r as usize] = value;
        }
    }
    out
}

// ---------------------------------------------------------------- AdaBoost

/// Discrete AdaBoost (two-class SAMME) over depth-1 stumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct AdaBoostModel {
    /// (stump, alpha) pairs; a stump votes vishing when its leaf value
    /// exceeds one half.
    pub stumps: Vec<(Tree, f64)>,
}

pub(crate) struct AdaBoostParams {
    pub n_rounds: usize,
}

const WEIGHT_FLOOR: f64 = 1e-12;

pub(crate) fn train_adaboost(
    matrix: &ColumnMatrix,
    positive: &[bool],
    params: &AdaBoostParams,
) -> AdaBoostModel {
    let n = matrix.n_rows;
    let config = TreeConfig { max_depth: 1, min_samples_leaf: 1.0, feature_subsample: None };
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps: Vec<(Tree, f64)> = Vec::new();

    for _ in 0..params.n_rounds {
        let task = TreeTask::Classification { positive, weights: &weights };
        let fitted = fit_tree(matrix, (0..n as u32).collect(), &task, &config, None);
        let predictions = leaf_predictions(&fitted, n);

        let epsilon: f64 = (0..n)
            .filter(|&i| (predictions[i] > 0.5) != positive[i])
            .map(|i| weights[i])
            .sum();
        if epsilon >= 0.5 {
            // The weighted stump is no better than chance; boosting is done.
            break;
        }
        let bounded = epsilon.max(WEIGHT_FLOOR);
        let alpha = ((1.0 - bounded) / bounded).ln();
        stumps.push((fitted.tree, alpha));
        if epsilon == 0.0 {
            break; // perfect stump; further rounds would repeat it
        }

        let mut total = 0.0;
        for i in 0..n {
            if (predictions[i] > 0.5) != positive[i] {
                weights[i] *= alpha.exp();
            }
            total += weights[i];
        }
        for w in &mut weights {
            *w /= total;
        }
    }

    AdaBoostModel { stumps }
}

impl AdaBoostModel {
    /// Normalized vote margin in [-1, 1]; positive means vishing.
    pub fn margin(&self, row: &SparseFeatureVector) -> f64 {
        if self.stumps.is_empty() {
            return 0.0;
        }
        let mut total_alpha = 0.0;
        let mut score = 0.0;
        for (stump, alpha) in &self.stumps {
            let vote = if stump.predict_value(row) > 0.5 { 1.0 } else { -1.0 };
            score += alpha * vote;
            total_alpha += alpha;
        }
        score / total_alpha
    }
}

// ---------------------------------------------------- Gradient boosting

/// Gradient boosting with logistic loss: depth-limited regression trees fit
/// to residuals, leaf values by a single Newton step, shrunk by the
/// learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct GradientBoostingModel {
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training log-loss before boosting and after each round.
    pub staged_loss: Vec<f64>,
}

pub(crate) struct GradientBoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

/// Newton leaf values are clamped into this band to keep single steps from
/// overshooting on nearly pure leaves.
const LEAF_VALUE_CLAMP: f64 = 4.0;

fn log_loss(scores: &[f64], positive: &[bool]) -> f64 {
    let mut loss = 0.0;
    for (&f, &pos) in scores.iter().zip(positive) {
        // ln(1 + e^{-yf}) with y in {+1,-1}
        let yf = if pos { f } else { -f };
        loss += if yf > 35.0 {
            0.0
        } else if yf < -35.0 {
            -yf
        } else {
            (-yf).exp().ln_1p()
        };
    }
    loss / scores.len() as f64
}

pub(crate) fn train_gradient_boosting(
    matrix: &ColumnMatrix,
    positive: &[bool],
    params: &GradientBoostingParams,
) -> GradientBoostingModel {
    let n = matrix.n_rows;
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_leaf: 1.0,
        feature_subsample: None,
    };

    let prior = positive.iter().filter(|&&p| p).count() as f64 / n as f64;
    let prior = prior.clamp(1e-6, 1.0 - 1e-6);
    let initial_score = (prior / (1.0 - prior)).ln();

    let mut scores = vec![initial_score; n];
    let mut staged_loss = vec![log_loss(&scores, positive)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut residuals = vec![0.0; n];

    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residuals[i] = if positive[i] { 1.0 - p } else { -p };
        }
        let task = TreeTask::Regression { targets: &residuals };
        let mut fitted = fit_tree(matrix, (0..n as u32).collect(), &task, &config, None);

        // Newton step per leaf: sum(residual) / sum(p(1-p)).
        for leaf_idx in 0..fitted.leaf_rows.len() {
            if fitted.leaf_rows[leaf_idx].is_empty() {
                continue;
            }
            let mut numerator = 0.0;
            let mut denominator = 0.0;
            for &r in &fitted.leaf_rows[leaf_idx] {
                let p = sigmoid(scores[r as usize]);
                numerator += residuals[r as usize];
                denominator += p * (1.0 - p);
            }
            let value = (numerator / (denominator + 1e-12))
                .clamp(-LEAF_VALUE_CLAMP, LEAF_VALUE_CLAMP);
            fitted.tree.set_leaf_value(leaf_idx, value);
            for &r in &fitted.leaf_rows[leaf_idx] {
                scores[r as usize] += params.learning_rate * value;
            }
        }
        staged_loss.push(log_loss(&scores, positive));
        trees.push(fitted.tree);
    }

    GradientBoostingModel { initial_score, learning_rate: params.learning_rate, trees, staged_loss }
}

impl GradientBoostingModel {
    pub fn raw_score(&self, row: &SparseFeatureVector) -> f64 {
        let mut f = self.initial_score;
        for tree in &self.trees {
            f += self.learning_rate * tree.predict_value(row);
        }
        f
    }

    pub fn probability(&self, row: &SparseFeatureVector) -> f64 {
        sigmoid(self.raw_score(row))
    }
}
