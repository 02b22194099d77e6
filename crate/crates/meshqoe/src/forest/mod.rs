//! Bagged random-forest regression: bootstrap sampling, out-of-bag
//! book-keeping, ensemble averaging and MSE-reduction feature importances.

mod tree;

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::{derive_seed, Error, Result};

pub use tree::{train_tree, Node, SplitRecord, Tree, N_FEATURES};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    /// Number of features drawn as split candidates at each node.
    pub m_try: usize,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
    /// `None` grows every tree to full depth without pruning.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 100,
            // floor(sqrt(5)) for the five-feature model.
            m_try: 2,
            bootstrap: true,
            min_samples_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid_argument("n_trees must be >= 1"));
        }
        if !(1..=N_FEATURES).contains(&self.m_try) {
            return Err(Error::invalid_argument(format!(
                "m_try must lie in 1..={N_FEATURES}, got {}",
                self.m_try
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid_argument("min_samples_leaf must be >= 1"));
        }
        Ok(())
    }
}

/// Normalized per-feature importance scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importances {
    /// One score per feature in [`FeatureVector::NAMES`] order; non-negative,
    /// summing to 1 unless degenerate.
    pub values: [f64; N_FEATURES],
    /// True when no tree performed any split; `values` is then uniform.
    pub degenerate: bool,
}

/// A trained ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: TrainConfig,
    pub trees: Vec<Tree>,
    pub importances: Importances,
    /// Size of the training dataset the forest was fitted on.
    pub n_samples: usize,
    /// Per-tree indices of samples never drawn into that tree's bootstrap.
    /// Empty when `bootstrap` is off. Not serialized.
    #[serde(skip)]
    pub oob_indices: Vec<Vec<usize>>,
    /// Per-tree split log backing the importance computation. Not serialized.
    #[serde(skip)]
    pub split_logs: Vec<Vec<SplitRecord>>,
}

impl Forest {
    /// Ensemble prediction: arithmetic mean of per-tree predictions.
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.predict_array(&x.to_array())
    }

    pub fn predict_array(&self, x: &[f64; N_FEATURES]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// (min, max) over every leaf of every tree; predictions always lie
    /// inside this interval.
    pub fn leaf_value_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for tree in &self.trees {
            for v in tree.leaf_values() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let forest: Forest = serde_json::from_str(json)?;
        if forest.trees.is_empty() {
            return Err(Error::validation("model has no trees"));
        }
        Ok(forest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut json = String::new();
        std::fs::File::open(path)?.read_to_string(&mut json)?;
        Forest::from_json(&json)
    }
}

/// Trains trees sequentially. Each tree owns a private RNG derived from
/// `(config.seed, tree index)`, so [`train_forest_parallel`] produces an
/// identical forest.
pub fn train_forest(samples: &[(FeatureVector, f64)], config: &TrainConfig) -> Result<Forest> {
    train_forest_impl(samples, config, false)
}

/// Same as [`train_forest`] but trains trees across threads.
pub fn train_forest_parallel(
    samples: &[(FeatureVector, f64)],
    config: &TrainConfig,
) -> Result<Forest> {
    train_forest_impl(samples, config, true)
}

fn train_forest_impl(
    samples: &[(FeatureVector, f64)],
    config: &TrainConfig,
    parallel: bool,
) -> Result<Forest> {
    if samples.is_empty() {
        return Err(Error::invalid_argument(
            "cannot train a forest on zero samples",
        ));
    }
    config.validate()?;
    let xs: Vec<[f64; N_FEATURES]> = samples.iter().map(|(x, _)| x.to_array()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let n = samples.len();

    let fit_one = |i: usize| -> (Tree, Vec<usize>, Vec<SplitRecord>) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, i as u64));
        let (indices, oob) = if config.bootstrap {
            let mut drawn = vec![false; n];
            let indices: Vec<usize> = (0..n)
                .map(|_| {
                    let j = rng.gen_range(0..n);
                    drawn[j] = true;
                    j
                })
                .collect();
            let oob = (0..n).filter(|&j| !drawn[j]).collect();
            (indices, oob)
        } else {
            ((0..n).collect(), Vec::new())
        };
        let (tree, log) = tree::fit_tree(&xs, &ys, indices, config, &mut rng);
        (tree, oob, log)
    };

    let fitted: Vec<(Tree, Vec<usize>, Vec<SplitRecord>)> = if parallel {
        (0..config.n_trees).into_par_iter().map(fit_one).collect()
    } else {
        (0..config.n_trees).map(fit_one).collect()
    };

    let mut trees = Vec::with_capacity(config.n_trees);
    let mut oob_indices = Vec::with_capacity(config.n_trees);
    let mut split_logs = Vec::with_capacity(config.n_trees);
    for (tree, oob, log) in fitted {
        trees.push(tree);
        oob_indices.push(oob);
        split_logs.push(log);
    }

    let importances = compute_importances(&split_logs, n);
    Ok(Forest {
        config: config.clone(),
        trees,
        importances,
        n_samples: n,
        oob_indices,
        split_logs,
    })
}

/// Recomputes importances from a forest's split log.
pub fn feature_importance(forest: &Forest) -> Importances {
    compute_importances(&forest.split_logs, forest.n_samples)
}

/// Per-feature mean of `(node_samples / n_samples) * delta_mse` over all
/// splits of all trees, normalized to sum to 1. A forest with no splits
/// yields the uniform vector flagged degenerate.
fn compute_importances(split_logs: &[Vec<SplitRecord>], n_samples: usize) -> Importances {
    let n_trees = split_logs.len() as f64;
    let mut raw = [0.0; N_FEATURES];
    for log in split_logs {
        for rec in log {
            raw[rec.feature] += rec.node_samples as f64 / n_samples as f64 * rec.delta_mse;
        }
    }
    for v in &mut raw {
        *v /= n_trees;
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Importances {
            values: [1.0 / N_FEATURES as f64; N_FEATURES],
            degenerate: true,
        };
    }
    for v in &mut raw {
        *v /= total;
    }
    Importances {
        values: raw,
        degenerate: false,
    }
}
