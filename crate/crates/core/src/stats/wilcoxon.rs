//! One-tailed Wilcoxon signed-rank test with an exact small-sample null.
//!
//! The test direction is fixed: "after" is expected to be *lower* than
//! "before" (an attack is expected to reduce accuracy). The reported
//! statistic is the rank sum of the cases that moved the other way, and the
//! one-tailed p-value is P(rank-sum <= W-) under the sign-flip null.

use serde::{Deserialize, Serialize};

use super::dist::normal_cdf;
use super::StatsError;

/// Paired observations of equal length with no NaNs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    before: Vec<f64>,
    after: Vec<f64>,
}

impl PairedSample {
    pub fn new(before: Vec<f64>, after: Vec<f64>) -> Result<Self, StatsError> {
        if before.len() != after.len() {
            return Err(StatsError::Shape(format!(
                "paired sample lengths differ: {} vs {}",
                before.len(),
                after.len()
            )));
        }
        if before.is_empty() {
            return Err(StatsError::Shape("paired sample is empty".into()));
        }
        if before.iter().chain(&after).any(|v| v.is_nan()) {
            return Err(StatsError::NanInput);
        }
        Ok(PairedSample { before, after })
    }

    pub fn len(&self) -> usize {
        self.before.len()
    }

    pub fn is_empty(&self) -> bool {
        self.before.is_empty()
    }
}

/// Exact tail probability as a dyadic rational: `numerator / 2^n_effective`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactTail {
    pub numerator: u64,
    pub denominator: u64,
}

/// Wilcoxon signed-rank outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Rank sum of negative differences (pairs where "after" exceeded
    /// "before"), using mid-ranks for tied absolute differences.
    pub w_minus: f64,
    /// Pairs remaining after zero differences are dropped.
    pub n_effective: usize,
    /// One-tailed p-value: P(rank-sum <= w_minus) under the null.
    pub p_one_tailed: f64,
    /// Present when the exact enumeration path was used (n_effective <= 20).
    pub exact: Option<ExactTail>,
}

/// Exact-enumeration cutoff. Above this the normal approximation with
/// continuity correction takes over.
pub const EXACT_LIMIT: usize = 20;

/// Runs the one-tailed test on `before` vs `after` accuracy pairs.
///
/// Zero differences are dropped (the drop-zeros convention). Absolute
/// differences are ranked with mid-ranks for ties. For `n_effective <= 20`
/// the p-value is exact over all `2^n` sign assignments; beyond that a
/// normal approximation with continuity correction and tie-corrected
/// variance is used.
pub fn wilcoxon_one_tailed(sample: &PairedSample) -> Result<WilcoxonResult, StatsError> {
    let diffs: Vec<f64> = sample
        .before
        .iter()
        .zip(&sample.after)
        .map(|(b, a)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(StatsError::NoInformation);
    }

    // Sort by absolute difference and assign doubled mid-ranks. Doubled
    // ranks are exact integers even at ties (mid-rank k/2 doubles to k),
    // which keeps the exact path free of floating point.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut doubled_ranks = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // Positions i+1..=j (1-based) tie; doubled mid-rank = (i+1) + j.
        let doubled = (i + 1 + j) as u64;
        for &idx in &order[i..j] {
            doubled_ranks[idx] = doubled;
        }
        i = j;
    }

    let doubled_w_minus: u64 = diffs
        .iter()
        .zip(&doubled_ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| *r)
        .sum();
    let w_minus = doubled_w_minus as f64 / 2.0;

    if n <= EXACT_LIMIT {
        let numerator = count_subsets_at_most(&doubled_ranks, doubled_w_minus);
        let denominator = 1u64 << n;
        return Ok(WilcoxonResult {
            w_minus,
            n_effective: n,
            p_one_tailed: numerator as f64 / denominator as f64,
            exact: Some(ExactTail { numerator, denominator }),
        });
    }

    // Normal approximation with continuity correction; the variance carries
    // the usual tie adjustment sum(t^3 - t)/48.
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_minus + 0.5 - mean) / variance.sqrt();
    Ok(WilcoxonResult {
        w_minus,
        n_effective: n,
        p_one_tailed: normal_cdf(z).clamp(0.0, 1.0),
        exact: None,
    })
}

/// Counts subsets of `doubled_ranks` whose sum is at most `limit`, by
/// dynamic programming over achievable sums. Equivalent to enumerating all
/// 2^n sign assignments.
fn count_subsets_at_most(doubled_ranks: &[u64], limit: u64) -> u64 {
    let total: u64 = doubled_ranks.iter().sum();
    let cap = total.min(limit) as usize;
    // counts[s] = number of subsets with doubled-rank sum exactly s; sums
    // beyond the cap can never fall back under it, so they are not tracked.
    let mut counts = vec![0u64; cap + 1];
    counts[0] = 1;
    for &rank in doubled_ranks {
        let r = rank as usize;
        for s in (0..=cap).rev() {
            if counts[s] != 0 && s + r <= cap {
                counts[s + r] += counts[s];
            }
        }
    }
    counts.iter().sum()
}
