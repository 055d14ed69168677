//! Per-row ranking of an accuracy matrix.
//!
//! Rows are classifiers, columns are attackers. Within each row the lowest
//! accuracy receives rank 1 (the strongest attack), ties get mid-ranks.

use serde::{Deserialize, Serialize};

use super::StatsError;

/// An accuracy matrix with its per-row ranks and column-average ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    values: Vec<Vec<f64>>,
    ranks: Vec<Vec<f64>>,
    average_ranks: Vec<f64>,
}

impl RankMatrix {
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn ranks(&self) -> &[Vec<f64>] {
        &self.ranks
    }

    pub fn average_ranks(&self) -> &[f64] {
        &self.average_ranks
    }

    /// Number of rows (classifiers).
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    /// Number of columns (attackers).
    pub fn n_cols(&self) -> usize {
        self.average_ranks.len()
    }
}

/// Ranks one row ascending with mid-ranks for ties.
fn rank_row(row: &[f64]) -> Vec<f64> {
    let k = row.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j < k && row[order[j]] == row[order[i]] {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = mid;
        }
        i = j;
    }
    ranks
}

/// Builds a [`RankMatrix`] from per-classifier accuracies.
pub fn rank_rows(values: &[Vec<f64>]) -> Result<RankMatrix, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Shape("accuracy matrix has no rows".into()));
    }
    let k = values[0].len();
    if k < 2 {
        return Err(StatsError::Shape(format!(
            "need at least 2 columns to rank, got {k}"
        )));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != k {
            return Err(StatsError::Shape(format!(
                "ragged matrix: row {i} has {} columns, expected {k}",
                row.len()
            )));
        }
        if row.iter().any(|v| v.is_nan()) {
            return Err(StatsError::NanInput);
        }
    }

    let ranks: Vec<Vec<f64>> = values.iter().map(|row| rank_row(row)).collect();
    let n = values.len() as f64;
    let average_ranks: Vec<f64> = (0..k)
        .map(|j| ranks.iter().map(|row| row[j]).sum::<f64>() / n)
        .collect();
    Ok(RankMatrix { values: values.to_vec(), ranks, average_ranks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::fixtures;

    #[test]
    fn reference_matrix_average_ranks() {
        let rm = rank_rows(&fixtures::adversarial_accuracy_matrix()).unwrap();
        let expected = [3.7, 2.0, 3.3, 1.0];
        for (got, want) in rm.average_ranks().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn tied_row_gets_mid_ranks() {
        let rm = rank_rows(&[vec![0.986301, 0.979452, 0.986301, 0.732877]]).unwrap();
        assert_eq!(rm.ranks()[0], vec![3.5, 2.0, 3.5, 1.0]);
    }

    #[test]
    fn fully_tied_row_averages_out() {
        let rm = rank_rows(&[vec![0.5, 0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(rm.ranks()[0], vec![2.5, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn row_ranks_sum_to_k_choose_formula() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rng.gen_range(2..8);
            let rows = rng.gen_range(1..6);
            let values: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..k).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect())
                .collect();
            let rm = rank_rows(&values).unwrap();
            let expected = (k * (k + 1)) as f64 / 2.0;
            for row in rm.ranks() {
                let sum: f64 = row.iter().sum();
                assert!((sum - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let err = rank_rows(&[vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, StatsError::Shape(_)));
    }
}
