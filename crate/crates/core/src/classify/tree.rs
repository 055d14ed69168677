//! CART trees over sparse feature vectors: weighted Gini classification and
//! squared-error regression, shared by the tree, forest, and boosting
//! classifiers.
//!
//! Determinism: features are scanned in ascending index order and only a
//! strictly better split replaces the incumbent, so equal-impurity ties go
//! to the lowest feature index (and to the lowest threshold within one
//! feature).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tfidf::SparseFeatureVector;

/// Column-major view of a training matrix: per feature, the nonzero
/// (row, value) pairs sorted by row.
pub(crate) struct ColumnMatrix {
    pub n_rows: usize,
    pub dimension: usize,
    columns: Vec<Vec<(u32, f64)>>,
}

impl ColumnMatrix {
    pub fn from_rows(rows: &[SparseFeatureVector]) -> Self {
        let dimension = rows.first().map_or(0, |r| r.dimension());
        let mut columns = vec![Vec::new(); dimension];
        for (row_idx, row) in rows.iter().enumerate() {
            for &(feature, value) in row.entries() {
                columns[feature as usize].push((row_idx as u32, value));
            }
        }
        ColumnMatrix { n_rows: rows.len(), dimension, columns }
    }

    /// Values of one feature for a sorted subset of rows, zeros included.
    fn gather(&self, feature: usize, subset: &[u32], out: &mut Vec<f64>) {
        out.clear();
        out.resize(subset.len(), 0.0);
        let column = &self.columns[feature];
        let mut c = 0;
        for (i, &row) in subset.iter().enumerate() {
            while c < column.len() && column[c].0 < row {
                c += 1;
            }
            if c < column.len() && column[c].0 == row {
                out[i] = column[c].1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree; `value` at a leaf is the weighted vishing fraction for
/// classification tasks and the fitted response for regression tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_value(&self, row: &SparseFeatureVector) -> f64 {
        self.nodes[self.leaf_of(row)].value()
    }

    pub fn leaf_of(&self, row: &SparseFeatureVector) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split { feature, threshold, left, right } => {
                    idx = if row.get(*feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_value_at_leaf(&self, leaf_idx: usize) -> f64 {
        self.nodes[leaf_idx].value()
    }

    pub fn set_leaf_value(&mut self, leaf_idx: usize, value: f64) {
        match &mut self.nodes[leaf_idx] {
            Node::Leaf { value: v } => *v = value,
            Node::Split { .. } => panic!("node {leaf_idx} is not a leaf"),
        }
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Node {
    fn value(&self) -> f64 {
        match self {
            Node::Leaf { value } => *value,
            Node::Split { .. } => unreachable!("split nodes carry no value"),
        }
    }
}

pub(crate) struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: f64,
    /// Features examined per split; None scans all of them.
    pub feature_subsample: Option<usize>,
}

/// What the tree optimizes at each split.
pub(crate) enum TreeTask<'a> {
    /// Weighted binary classification by Gini impurity. `positive[i]` marks
    /// the vishing rows; `weights` are per-row sample weights.
    Classification { positive: &'a [bool], weights: &'a [f64] },
    /// Regression on `targets` by squared-error reduction (unit weights).
    Regression { targets: &'a [f64] },
}

struct Builder<'a> {
    matrix: &'a ColumnMatrix,
    task: &'a TreeTask<'a>,
    config: &'a TreeConfig,
    nodes: Vec<Node>,
    /// Training rows that landed in each node (populated for leaves).
    leaf_rows: Vec<Vec<u32>>,
    scratch: Vec<f64>,
}

/// A fitted tree plus the training rows at each leaf, so boosting can
/// recompute leaf values.
pub(crate) struct FittedTree {
    pub tree: Tree,
    /// Parallel to `tree.nodes`; non-empty exactly at the leaves.
    pub leaf_rows: Vec<Vec<u32>>,
}

/// Leaf statistic: weighted vishing fraction or mean target.
fn leaf_value(task: &TreeTask, rows: &[u32]) -> f64 {
    match task {
        TreeTask::Classification { positive, weights } => {
            let mut total = 0.0;
            let mut pos = 0.0;
            for &r in rows {
                let w = weights[r as usize];
                total += w;
                if positive[r as usize] {
                    pos += w;
                }
            }
            if total > 0.0 {
                pos / total
            } else {
                0.0
            }
        }
        TreeTask::Regression { targets } => {
            if rows.is_empty() {
                0.0
            } else {
                rows.iter().map(|&r| targets[r as usize]).sum::<f64>() / rows.len() as f64
            }
        }
    }
}

/// Impurity cost of a candidate split, lower is better. For classification
/// this is the weighted Gini of the children; for regression the summed
/// squared error around each child mean.
struct SplitScan<'t> {
    task: &'t TreeTask<'t>,
}

struct BestSplit {
    feature: u32,
    threshold: f64,
    cost: f64,
}

impl<'t> SplitScan<'t> {
    /// Scans sorted (value, row) pairs for the best threshold of one feature.
    /// Returns None when no threshold separates the rows while honoring
    /// `min_samples_leaf` on both sides.
    fn best_threshold(
        &self,
        pairs: &[(f64, u32)],
        min_leaf: f64,
        incumbent: Option<f64>,
    ) -> Option<(f64, f64)> {
        match self.task {
            TreeTask::Classification { positive, weights } => {
                let total_w: f64 = pairs.iter().map(|&(_, r)| weights[r as usize]).sum();
                let total_pos: f64 = pairs
                    .iter()
                    .filter(|&&(_, r)| positive[r as usize])
                    .map(|&(_, r)| weights[r as usize])
                    .sum();
                let mut best: Option<(f64, f64)> = None;
                let mut left_w = 0.0;
                let mut left_pos = 0.0;
                let mut left_n = 0.0;
                for i in 0..pairs.len() - 1 {
                    let (value, row) = pairs[i];
                    let w = weights[row as usize];
                    left_w += w;
                    left_n += 1.0;
                    if positive[row as usize] {
                        left_pos += w;
                    }
                    if pairs[i + 1].0 == value {
                        continue; // not a boundary between distinct values
                    }
                    let right_n = pairs.len() as f64 - left_n;
                    if left_n < min_leaf || right_n < min_leaf {
                        continue;
                    }
                    let right_w = total_w - left_w;
                    if left_w <= 0.0 || right_w <= 0.0 {
                        continue;
                    }
                    let right_pos = total_pos - left_pos;
                    let gini = |w: f64, pos: f64| {
                        let p = pos / w;
                        let q = 1.0 - p;
                        1.0 - p * p - q * q
                    };
                    let cost = left_w * gini(left_w, left_pos) + right_w * gini(right_w, right_pos);
                    let threshold = value + 0.5 * (pairs[i + 1].0 - value);
                    if best.as_ref().is_none_or(|&(c, _)| cost < c)
                        && incumbent.is_none_or(|inc| cost < inc)
                    {
                        best = Some((cost, threshold));
                    }
                }
                best.map(|(c, t)| (t, c))
            }
            TreeTask::Regression { targets } => {
                let total_sum: f64 = pairs.iter().map(|&(_, r)| targets[r as usize]).sum();
                let total_sq: f64 = pairs
                    .iter()
                    .map(|&(_, r)| {
                        let t = targets[r as usize];
                        t * t
                    })
                    .sum();
                let mut best: Option<(f64, f64)> = None;
                let mut left_sum = 0.0;
                let mut left_sq = 0.0;
                let mut left_n = 0.0;
                for i in 0..pairs.len() - 1 {
                    let (value, row) = pairs[i];
                    let t = targets[row as usize];
                    left_sum += t;
                    left_sq += t * t;
                    left_n += 1.0;
                    if pairs[i + 1].0 == value {
                        continue;
                    }
                    let right_n = pairs.len() as f64 - left_n;
                    if left_n < min_leaf || right_n < min_leaf {
                        continue;
                    }
                    let right_sum = total_sum - left_sum;
                    let right_sq = total_sq - left_sq;
                    let sse_left = left_sq - left_sum * left_sum / left_n;
                    let sse_right = right_sq - right_sum * right_sum / right_n;
                    let cost = sse_left + sse_right;
                    let threshold = value + 0.5 * (pairs[i + 1].0 - value);
                    if best.as_ref().is_none_or(|&(c, _)| cost < c)
                        && incumbent.is_none_or(|inc| cost < inc)
                    {
                        best = Some((cost, threshold));
                    }
                }
                best.map(|(c, t)| (t, c))
            }
        }
    }
}

impl<'a> Builder<'a> {
    fn is_pure(&self, rows: &[u32]) -> bool {
        match self.task {
            TreeTask::Classification { positive, .. } => {
                let first = positive[rows[0] as usize];
                rows.iter().all(|&r| positive[r as usize] == first)
            }
            TreeTask::Regression { targets } => {
                let first = targets[rows[0] as usize];
                rows.iter().all(|&r| targets[r as usize] == first)
            }
        }
    }

    fn build(&mut self, rows: Vec<u32>, depth: usize, rng: &mut Option<&mut ChaCha8Rng>) -> usize {
        let make_leaf = |builder: &mut Builder<'a>, rows: Vec<u32>| -> usize {
            let idx = builder.nodes.len();
            builder.nodes.push(Node::Leaf { value: leaf_value(builder.task, &rows) });
            builder.leaf_rows.push(rows);
            idx
        };

        if depth >= self.config.max_depth
            || (rows.len() as f64) < 2.0 * self.config.min_samples_leaf
            || rows.len() < 2
            || self.is_pure(&rows)
        {
            return make_leaf(self, rows);
        }

        // Candidate features, ascending for deterministic tie-breaking.
        let candidates: Vec<usize> = match (self.config.feature_subsample, rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < self.matrix.dimension => {
                sample_without_replacement(self.matrix.dimension, k, rng)
            }
            _ => (0..self.matrix.dimension).collect(),
        };

        let scan = SplitScan { task: self.task };
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            let mut values = std::mem::take(&mut self.scratch);
            self.matrix.gather(feature, &rows, &mut values);
            pairs.clear();
            pairs.extend(values.iter().copied().zip(rows.iter().copied()));
            self.scratch = values;
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue; // constant feature within this node
            }
            let incumbent = best.as_ref().map(|b| b.cost);
            if let Some((threshold, cost)) =
                scan.best_threshold(&pairs, self.config.min_samples_leaf, incumbent)
            {
                best = Some(BestSplit { feature: feature as u32, threshold, cost });
            }
        }

        let Some(split) = best else {
            return make_leaf(self, rows);
        };

        let mut values = std::mem::take(&mut self.scratch);
        self.matrix.gather(split.feature as usize, &rows, &mut values);
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for (&row, &value) in rows.iter().zip(values.iter()) {
            if value <= split.threshold {
                left_rows.push(row);
            } else {
                right_rows.push(row);
            }
        }
        self.scratch = values;
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let idx = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        self.leaf_rows.push(Vec::new());
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[idx] {
            *l = left;
            *r = right;
        }
        idx
    }
}

/// Deterministic sample of `k` distinct values from `0..n`, returned sorted.
fn sample_without_replacement(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(k <= n);
    // Partial Fisher-Yates over an index pool.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut picked: Vec<usize> = pool[..k].to_vec();
    picked.sort_unstable();
    picked
}

/// Grows a tree on `rows` (indices into the column matrix).
pub(crate) fn fit_tree(
    matrix: &ColumnMatrix,
    rows: Vec<u32>,
    task: &TreeTask,
    config: &TreeConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> FittedTree {
    assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
    let mut builder = Builder {
        matrix,
        task,
        config,
        nodes: Vec::new(),
        leaf_rows: Vec::new(),
        scratch: Vec::new(),
    };
    builder.build(rows, 0, &mut rng);
    FittedTree { tree: Tree { nodes: builder.nodes }, leaf_rows: builder.leaf_rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse(entries: &[(u32, f64)], dim: usize) -> SparseFeatureVector {
        SparseFeatureVector::new(entries.to_vec(), dim)
    }

    fn xor_rows() -> (Vec<SparseFeatureVector>, Vec<bool>) {
        let rows = vec![
            sparse(&[], 2),
            sparse(&[(0, 1.0)], 2),
            sparse(&[(1, 1.0)], 2),
            sparse(&[(0, 1.0), (1, 1.0)], 2),
        ];
        let positive = vec![false, true, true, false];
        (rows, positive)
    }

    #[test]
    fn xor_needs_depth_two() {
        let (rows, positive) = xor_rows();
        let matrix = ColumnMatrix::from_rows(&rows);
        let weights = vec![1.0; 4];
        let task = TreeTask::Classification { positive: &positive, weights: &weights };

        let shallow = fit_tree(
            &matrix,
            (0..4).collect(),
            &task,
            &TreeConfig { max_depth: 1, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        let deep = fit_tree(
            &matrix,
            (0..4).collect(),
            &task,
            &TreeConfig { max_depth: 2, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        let accuracy = |tree: &Tree| -> f64 {
            rows.iter()
                .zip(&positive)
                .filter(|(row, &pos)| (tree.predict_value(row) > 0.5) == pos)
                .count() as f64
                / 4.0
        };
        assert!(accuracy(&shallow.tree) < 1.0);
        assert_eq!(accuracy(&deep.tree), 1.0);
        assert_eq!(deep.tree.depth(), 2);
    }

    #[test]
    fn pure_node_becomes_leaf() {
        let rows = vec![sparse(&[(0, 1.0)], 1), sparse(&[(0, 2.0)], 1)];
        let positive = vec![true, true];
        let weights = vec![1.0; 2];
        let matrix = ColumnMatrix::from_rows(&rows);
        let fitted = fit_tree(
            &matrix,
            vec![0, 1],
            &TreeTask::Classification { positive: &positive, weights: &weights },
            &TreeConfig { max_depth: 8, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        assert_eq!(fitted.tree.nodes.len(), 1);
        assert_eq!(fitted.tree.predict_value(&rows[0]), 1.0);
    }

    #[test]
    fn regression_tree_fits_step_function() {
        let rows: Vec<SparseFeatureVector> =
            (0..8).map(|i| sparse(&[(0, i as f64)], 1)).collect();
        let targets: Vec<f64> = (0..8).map(|i| if i < 4 { -1.0 } else { 2.0 }).collect();
        let matrix = ColumnMatrix::from_rows(&rows);
        let fitted = fit_tree(
            &matrix,
            (0..8).collect(),
            &TreeTask::Regression { targets: &targets },
            &TreeConfig { max_depth: 1, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        assert_eq!(fitted.tree.predict_value(&rows[0]), -1.0);
        assert_eq!(fitted.tree.predict_value(&rows[7]), 2.0);
    }

    #[test]
    fn equal_impurity_ties_pick_lowest_feature() {
        // Feature 1 separates identically to feature 0; feature 0 must win.
        let rows = vec![
            sparse(&[(0, 1.0), (1, 1.0)], 2),
            sparse(&[(0, 2.0), (1, 2.0)], 2),
        ];
        let positive = vec![false, true];
        let weights = vec![1.0; 2];
        let matrix = ColumnMatrix::from_rows(&rows);
        let fitted = fit_tree(
            &matrix,
            vec![0, 1],
            &TreeTask::Classification { positive: &positive, weights: &weights },
            &TreeConfig { max_depth: 4, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        match &fitted.tree.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_splits() {
        let rows: Vec<SparseFeatureVector> =
            (0..4).map(|i| sparse(&[(0, i as f64)], 1)).collect();
        let positive = vec![false, true, true, true];
        let weights = vec![1.0; 4];
        let matrix = ColumnMatrix::from_rows(&rows);
        let fitted = fit_tree(
            &matrix,
            (0..4).collect(),
            &TreeTask::Classification { positive: &positive, weights: &weights },
            &TreeConfig { max_depth: 4, min_samples_leaf: 2.0, feature_subsample: None },
            None,
        );
        // The pure boundary (0 vs 1..3) would leave one row on the left, so
        // the leaf minimum forces the balanced 2|2 split, and neither child
        // (2 rows each) may split again.
        assert_eq!(fitted.tree.nodes.len(), 3);
        match fitted.tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn leaf_rows_partition_the_node() {
        let (rows, positive) = xor_rows();
        let weights = vec![1.0; 4];
        let matrix = ColumnMatrix::from_rows(&rows);
        let fitted = fit_tree(
            &matrix,
            (0..4).collect(),
            &TreeTask::Classification { positive: &positive, weights: &weights },
            &TreeConfig { max_depth: 3, min_samples_leaf: 1.0, feature_subsample: None },
            None,
        );
        let mut seen: Vec<u32> = fitted.leaf_rows.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for (idx, rows_at) in fitted.leaf_rows.iter().enumerate() {
            match fitted.tree.nodes[idx] {
                Node::Leaf { .. } => assert!(!rows_at.is_empty()),
                Node::Split { .. } => assert!(rows_at.is_empty()),
            }
        }
    }
}
