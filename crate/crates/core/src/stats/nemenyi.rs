//! Nemenyi post-hoc test: pairwise p-values from the studentized-range
//! distribution over average-rank differences.

use serde::{Deserialize, Serialize};

use super::dist::studentized_range_cdf;
use super::ranking::RankMatrix;
use super::StatsError;

/// Symmetric k x k matrix of pairwise p-values with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiMatrix {
    pub p: Vec<Vec<f64>>,
}

impl NemenyiMatrix {
    pub fn k(&self) -> usize {
        self.p.len()
    }
}

/// Computes the pairwise significance matrix.
///
/// For columns i and j with average ranks R_i, R_j over n rows and k
/// columns, the statistic is q = (R_i - R_j) / sqrt(k(k+1)/(6n)) and the
/// p-value is 1 - F_sr(|q| * sqrt(2); k), with F_sr the infinite-df
/// studentized-range CDF. Runs unconditionally; gating on a significant
/// Friedman result is the caller's policy.
pub fn nemenyi(rm: &RankMatrix) -> Result<NemenyiMatrix, StatsError> {
    let n = rm.n_rows();
    let k = rm.n_cols();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "Nemenyi needs at least 2 rows, got {n}"
        )));
    }
    let scale = ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt();
    let ranks = rm.average_ranks();
    let mut p = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let q = (ranks[i] - ranks[j]).abs() / scale;
            let tail = (1.0 - studentized_range_cdf(q * std::f64::consts::SQRT_2, k))
                .clamp(0.0, 1.0);
            p[i][j] = tail;
            p[j][i] = tail;
        }
    }
    Ok(NemenyiMatrix { p })
}
