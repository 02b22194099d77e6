//! CART regression trees: recursive best-split search minimizing the
//! weighted child MSE over random feature subsets.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::forest::TrainConfig;
use crate::{Error, Result};

pub const N_FEATURES: usize = 5;

/// One node of a tree, stored in a flat arena (root at index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        #[serde(rename = "feature_index")]
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A trained regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Routes a query to a leaf; queries go left when `x[feature] <= threshold`.
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            _ => None,
        })
    }
}

/// Book-keeping for one executed split, used for feature importances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRecord {
    /// Feature index the node split on.
    pub feature: usize,
    /// Number of training samples reaching the node.
    pub node_samples: usize,
    /// MSE(parent) - weighted MSE(children), both over the node's samples.
    pub delta_mse: f64,
}

/// Trains a single CART on `samples`; thresholds are midpoints between
/// consecutive distinct sorted feature values.
pub fn train_tree(
    samples: &[(FeatureVector, f64)],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Tree> {
    if samples.is_empty() {
        return Err(Error::invalid_argument(
            "cannot train a tree on zero samples",
        ));
    }
    config.validate()?;
    let xs: Vec<[f64; N_FEATURES]> = samples.iter().map(|(x, _)| x.to_array()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let indices: Vec<usize> = (0..samples.len()).collect();
    Ok(fit_tree(&xs, &ys, indices, config, rng).0)
}

/// Internal entry point shared with forest training: builds a tree over the
/// rows selected by `indices` (a bootstrap sample may repeat rows).
pub(crate) fn fit_tree(
    xs: &[[f64; N_FEATURES]],
    ys: &[f64],
    indices: Vec<usize>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> (Tree, Vec<SplitRecord>) {
    let mut builder = TreeBuilder {
        xs,
        ys,
        config,
        nodes: Vec::new(),
        splits: Vec::new(),
    };
    builder.grow(indices, 0, rng);
    (
        Tree {
            nodes: builder.nodes,
        },
        builder.splits,
    )
}

struct TreeBuilder<'a> {
    xs: &'a [[f64; N_FEATURES]],
    ys: &'a [f64],
    config: &'a TrainConfig,
    nodes: Vec<Node>,
    splits: Vec<SplitRecord>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    children_sse: f64,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = indices.len();
        let mean = indices.iter().map(|&i| self.ys[i]).sum::<f64>() / n as f64;

        let at_depth_limit = self.config.max_depth.is_some_and(|d| depth >= d);
        let too_small = n < 2 * self.config.min_samples_leaf;
        let pure = indices.iter().all(|&i| self.ys[i] == self.ys[indices[0]]);

        let split = if at_depth_limit || too_small || pure {
            None
        } else {
            self.best_split(&indices, rng)
        };

        // Two-pass SSE for the gain test; more accurate than the scan's
        // running sums on near-constant targets.
        let parent_sse: f64 = indices.iter().map(|&i| (self.ys[i] - mean).powi(2)).sum();

        match split {
            Some(best) if best.children_sse < parent_sse => {
                self.splits.push(SplitRecord {
                    feature: best.feature,
                    node_samples: n,
                    delta_mse: (parent_sse - best.children_sse) / n as f64,
                });
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.xs[i][best.feature] <= best.threshold);
                let slot = self.nodes.len();
                self.nodes.push(Node::Leaf { value: mean }); // placeholder
                let left = self.grow(left_idx, depth + 1, rng);
                let right = self.grow(right_idx, depth + 1, rng);
                self.nodes[slot] = Node::Split {
                    feature: best.feature,
                    threshold: best.threshold,
                    left,
                    right,
                };
                slot
            }
            _ => {
                self.nodes.push(Node::Leaf { value: mean });
                self.nodes.len() - 1
            }
        }
    }

    /// Scans `m_try` features drawn from `rng`; ties on equal SSE break to
    /// the lowest feature index, then the smallest threshold.
    fn best_split(&self, indices: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let n = indices.len();
        let msl = self.config.min_samples_leaf;

        let mut features: Vec<usize> =
            rand::seq::index::sample(rng, N_FEATURES, self.config.m_try).into_vec();
        features.sort_unstable();

        let total_sum: f64 = indices.iter().map(|&i| self.ys[i]).sum();
        let total_sq: f64 = indices.iter().map(|&i| self.ys[i] * self.ys[i]).sum();

        let mut best: Option<BestSplit> = None;
        let mut sorted = indices.to_vec();
        for &f in &features {
            sorted.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for pos in 0..n - 1 {
                let i = sorted[pos];
                left_sum += self.ys[i];
                left_sq += self.ys[i] * self.ys[i];
                let v = self.xs[i][f];
                let v_next = self.xs[sorted[pos + 1]][f];
                if v_next <= v {
                    continue;
                }
                let threshold = 0.5 * (v + v_next);
                // Adjacent floats can round the midpoint onto v_next, which
                // would route v_next left while the scan counted it right.
                if threshold >= v_next {
                    continue;
                }
                let n_left = pos + 1;
                let n_right = n - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let sse_left = (left_sq - left_sum * left_sum / n_left as f64).max(0.0);
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let sse_right = (right_sq - right_sum * right_sum / n_right as f64).max(0.0);
                let children_sse = sse_left + sse_right;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        children_sse < b.children_sse
                            || (children_sse == b.children_sse
                                && (f < b.feature || (f == b.feature && threshold < b.threshold)))
                    }
                };
                if better {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        children_sse,
                    });
                }
            }
        }
        best
    }
}
