//! Linear classifiers: logistic regression and a linear SVM, both trained by
//! full-batch (sub)gradient descent from a zero initialization.
//!
//! Each epoch takes one descent step; if the step would increase the
//! objective the step length is halved until it does not (up to a fixed
//! budget), so the recorded per-epoch training loss is non-increasing.

use serde::{Deserialize, Serialize};

use crate::tfidf::SparseFeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) enum LinearKind {
    Logistic,
    Svm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LinearModel {
    pub kind: LinearKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value after each epoch (element 0 is the initial loss).
    pub training_loss: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GdParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub learning_rate_decay: f64,
    pub l2: f64,
}

/// Numerically stable ln(1 + e^z).
fn log1p_exp(z: f64) -> f64 {
    if z > 35.0 {
        z
    } else if z < -35.0 {
        0.0
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Regularized logistic loss and its gradient.
///
/// Labels are +/-1. The objective is mean log-loss plus (l2/2)*||w||^2; the
/// bias is unregularized. Exposed for finite-difference gradient checks.
pub fn logistic_loss_and_grad(
    weights: &[f64],
    bias: f64,
    rows: &[SparseFeatureVector],
    labels_pm1: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let m = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &y) in rows.iter().zip(labels_pm1) {
        let margin = row.dot(weights) + bias;
        loss += log1p_exp(-y * margin);
        // d/dm ln(1+e^{-ym}) = -y * sigma(-ym)
        let coeff = -y * sigmoid(-y * margin);
        for &(i, x) in row.entries() {
            grad_w[i as usize] += coeff * x;
        }
        grad_b += coeff;
    }
    loss /= m;
    grad_b /= m;
    let mut reg = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g /= m;
        *g += l2 * w;
        reg += w * w;
    }
    (loss + 0.5 * l2 * reg, grad_w, grad_b)
}

/// Regularized hinge loss and a subgradient, labels +/-1.
pub fn hinge_loss_and_subgrad(
    weights: &[f64],
    bias: f64,
    rows: &[SparseFeatureVector],
    labels_pm1: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let m = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &y) in rows.iter().zip(labels_pm1) {
        let margin = row.dot(weights) + bias;
        let slack = 1.0 - y * margin;
        if slack > 0.0 {
            loss += slack;
            for &(i, x) in row.entries() {
                grad_w[i as usize] -= y * x;
            }
            grad_b -= y;
        }
    }
    loss /= m;
    grad_b /= m;
    let mut reg = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g /= m;
        *g += l2 * w;
        reg += w * w;
    }
    (loss + 0.5 * l2 * reg, grad_w, grad_b)
}

pub(crate) fn train_linear(
    kind: LinearKind,
    rows: &[SparseFeatureVector],
    labels_pm1: &[f64],
    params: &GdParams,
    dimension: usize,
) -> LinearModel {
    let objective = |w: &[f64], b: f64| -> (f64, Vec<f64>, f64) {
        match kind {
            LinearKind::Logistic => logistic_loss_and_grad(w, b, rows, labels_pm1, params.l2),
            LinearKind::Svm => hinge_loss_and_subgrad(w, b, rows, labels_pm1, params.l2),
        }
    };

    let mut weights = vec![0.0; dimension];
    let mut bias = 0.0;
    let (mut loss, mut grad_w, mut grad_b) = objective(&weights, bias);
    let mut training_loss = vec![loss];

    'epochs: for epoch in 0..params.epochs {
        let mut step = params.learning_rate
            / (1.0 + params.learning_rate_decay * epoch as f64);
        // Halve the step until the objective stops increasing.
        for _ in 0..30 {
            let candidate_w: Vec<f64> =
                weights.iter().zip(&grad_w).map(|(w, g)| w - step * g).collect();
            let candidate_b = bias - step * grad_b;
            let (new_loss, new_grad_w, new_grad_b) = objective(&candidate_w, candidate_b);
            if new_loss <= loss {
                weights = candidate_w;
                bias = candidate_b;
                loss = new_loss;
                grad_w = new_grad_w;
                grad_b = new_grad_b;
                training_loss.push(loss);
                continue 'epochs;
            }
            step *= 0.5;
        }
        // No step length made progress; the iterate is at (numerical) optimum.
        break;
    }

    LinearModel { kind, weights, bias, training_loss }
}

impl LinearModel {
    pub fn margin(&self, row: &SparseFeatureVector) -> f64 {
        row.dot(&self.weights) + self.bias
    }
}
