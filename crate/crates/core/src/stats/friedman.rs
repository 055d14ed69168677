//! Tie-corrected Friedman test over a rank matrix.

use serde::{Deserialize, Serialize};

use super::dist::chi_square_sf;
use super::ranking::RankMatrix;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    /// Tie-corrected chi-square statistic.
    pub chi2: f64,
    /// The uncorrected statistic, kept for inspection.
    pub chi2_uncorrected: f64,
    pub df: usize,
    pub p: f64,
}

/// Runs the Friedman test on per-row ranks of `n` classifiers across `k`
/// attackers.
///
/// The uncorrected statistic is 12n/(k(k+1)) * sum_j(mean_rank_j^2) -
/// 3n(k+1). Mid-rank ties shrink rank variance, so the statistic is divided
/// by the correction 1 - sum(t^3 - t) / (n*k*(k^2-1)), summed over tie
/// groups of every row. Fully tied data (correction <= 0) reports chi2 = 0,
/// p = 1.
pub fn friedman(rm: &RankMatrix) -> Result<FriedmanResult, StatsError> {
    let n = rm.n_rows();
    let k = rm.n_cols();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "Friedman needs at least 2 rows, got {n}"
        )));
    }
    if k < 2 {
        return Err(StatsError::Shape(format!(
            "Friedman needs at least 2 columns, got {k}"
        )));
    }

    let nf = n as f64;
    let kf = k as f64;
    let sum_sq_means: f64 = rm.average_ranks().iter().map(|r| r * r).sum();
    let uncorrected = 12.0 * nf / (kf * (kf + 1.0)) * sum_sq_means - 3.0 * nf * (kf + 1.0);

    let mut tie_sum = 0.0;
    for row in rm.values() {
        let mut sorted: Vec<f64> = row.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j < k && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            tie_sum += t * t * t - t;
            i = j;
        }
    }
    let correction = 1.0 - tie_sum / (nf * kf * (kf * kf - 1.0));
    let df = k - 1;
    if correction <= 0.0 {
        return Ok(FriedmanResult { chi2: 0.0, chi2_uncorrected: uncorrected, df, p: 1.0 });
    }
    let chi2 = uncorrected / correction;
    Ok(FriedmanResult { chi2, chi2_uncorrected: uncorrected, df, p: chi_square_sf(chi2, df as f64) })
}
