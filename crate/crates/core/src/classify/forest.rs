//! Random forest: bagged Gini trees with per-split feature subsampling.
//!
//! Each tree draws a bootstrap sample (stored as per-row multiplicities fed
//! to the weighted tree builder) and its own RNG seeded from the classifier
//! seed and tree index, so training is reproducible tree by tree.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed::derive_seed;
use crate::tfidf::SparseFeatureVector;

use super::tree::{fit_tree, ColumnMatrix, Tree, TreeConfig, TreeTask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForestModel {
    pub trees: Vec<Tree>,
}

pub(crate) struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: f64,
    pub seed: u64,
}

pub(crate) fn train_forest(
    matrix: &ColumnMatrix,
    positive: &[bool],
    params: &ForestParams,
) -> ForestModel {
    let n = matrix.n_rows;
    let feature_subsample = (matrix.dimension as f64).sqrt().ceil() as usize;
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample: Some(feature_subsample.max(1)),
    };

    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &format!("tree-{t}")));
            // Bootstrap: multiplicities become sample weights.
            let mut weights = vec![0.0f64; n];
            for _ in 0..n {
                weights[rng.gen_range(0..n)] += 1.0;
            }
            let rows: Vec<u32> =
                (0..n as u32).filter(|&r| weights[r as usize] > 0.0).collect();
            let task = TreeTask::Classification { positive, weights: &weights };
            fit_tree(matrix, rows, &task, &config, Some(&mut rng)).tree
        })
        .collect();
    ForestModel { trees }
}

impl ForestModel {
    /// Fraction of trees voting vishing, in [0, 1] with granularity
    /// 1/n_trees. Each tree votes by its leaf majority.
    pub fn vote_fraction(&self, row: &SparseFeatureVector) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|tree| tree.predict_value(row) > 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}
