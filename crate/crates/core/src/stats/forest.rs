//! Random-forest regression with impurity-based (Gini) feature importance.
//!
//! Each tree is a CART regressor grown on a bootstrap resample. Splits
//! minimize the weighted variance of the children over every feature and
//! every midpoint between consecutive distinct values. Ties go to the lowest
//! feature index, then the lowest threshold.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{domain, domain_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// `None` for leaves.
    pub split: Option<Split>,
    /// Mean target of the node's samples.
    pub value: f64,
    pub samples: usize,
    /// Variance of the node's targets.
    pub impurity: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Root first.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        while let Some(split) = &node.split {
            node = if x[split.feature] <= split.threshold { &self.nodes[split.left] } else { &self.nodes[split.right] };
        }
        node.value
    }

    pub fn is_leaf(&self) -> bool {
        self.nodes[0].split.is_none()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub params: ForestParams,
    pub n_features: usize,
    /// Targets were constant, so every tree is a single leaf.
    pub degenerate_targets: bool,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Grower<'a> {
    features: &'a DMatrix<f64>,
    targets: &'a [f64],
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.targets[i]).sum();
        let mean = sum / n as f64;
        let sse: f64 = idx.iter().map(|&i| (self.targets[i] - mean).powi(2)).sum();
        let id = self.nodes.len();
        self.nodes.push(Node { split: None, value: mean, samples: n, impurity: sse / n as f64, depth });
        if depth >= self.max_depth || n < 2 || sse <= 0.0 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx, sse) else {
            return id;
        };
        let mid = partition(idx, |&i| self.features[(i, feature)] <= threshold);
        let (left_idx, right_idx) = idx.split_at_mut(mid);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[id].split = Some(Split { feature, threshold, left, right });
        id
    }

    fn best_split(&self, idx: &[usize], parent_sse: f64) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_gain = 1e-12 * parent_sse;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.features.ncols() {
            let x = |i: usize| self.features[(i, f)];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
            let total: f64 = order.iter().map(|&i| self.targets[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| self.targets[i].powi(2)).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 0..n - 1 {
                let y = self.targets[order[k]];
                s += y;
                sq += y * y;
                let (lo, hi) = (x(order[k]), x(order[k + 1]));
                if lo >= hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = (n - k - 1) as f64;
                let sse_l = sq - s * s / nl;
                let sse_r = (total_sq - sq) - (total - s).powi(2) / nr;
                let gain = parent_sse - sse_l - sse_r;
                if gain > min_gain && best.is_none_or(|(_, _, g)| gain > g) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((f, threshold, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }
}

/// In-place stable-enough partition; returns the number of elements for
/// which `pred` holds (they end up first).
fn partition(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(idx.len());
    let mut right: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in idx.iter() {
        if pred(&i) {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let mid = left.len();
    idx[..mid].copy_from_slice(&left);
    idx[mid..].copy_from_slice(&right);
    mid
}

fn grow_tree(features: &DMatrix<f64>, targets: &[f64], max_depth: usize, seed: u64) -> RegressionTree {
    let n = targets.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut grower = Grower { features, targets, max_depth, nodes: Vec::new() };
    grower.grow(&mut sample, 0);
    RegressionTree { nodes: grower.nodes }
}

/// Fit a forest on `features` (N x F) against `targets`.
pub fn rf_fit(features: &DMatrix<f64>, targets: &[f64], params: ForestParams) -> Result<ForestModel> {
    let (n, f) = features.shape();
    if n != targets.len() {
        return Err(Error::LengthMismatch(n, targets.len()));
    }
    if n < 5 {
        return Err(Error::InsufficientRecords { needed: 5, got: n });
    }
    if f == 0 {
        return Err(Error::InvalidArgument("need at least one feature".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("need at least one tree".into()));
    }
    if features.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("features and targets must be finite".into()));
    }
    let trees: Vec<RegressionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(features, targets, params.max_depth, domain_seed(params.seed, domain::FOREST, t as u64)))
        .collect();
    let degenerate_targets = targets.iter().all(|&y| y == targets[0]);
    Ok(ForestModel { trees, params, n_features: f, degenerate_targets })
}

/// Impurity-decrease importance per feature, normalized per tree and
/// averaged over the trees that split at all.
pub fn rf_importance(forest: &ForestModel) -> Vec<f64> {
    let mut total = vec![0.0; forest.n_features];
    let mut used = 0usize;
    for tree in &forest.trees {
        let root = tree.nodes[0].samples as f64;
        let mut imp = vec![0.0; forest.n_features];
        for node in &tree.nodes {
            if let Some(split) = &node.split {
                let (l, r) = (&tree.nodes[split.left], &tree.nodes[split.right]);
                let n = node.samples as f64;
                let decrease =
                    node.impurity - (l.samples as f64 / n) * l.impurity - (r.samples as f64 / n) * r.impurity;
                imp[split.feature] += (n / root) * decrease.max(0.0);
            }
        }
        let sum: f64 = imp.iter().sum();
        if sum > 0.0 {
            used += 1;
            for (t, v) in total.iter_mut().zip(imp) {
                *t += v / sum;
            }
        }
    }
    if used > 0 {
        total.iter_mut().for_each(|v| *v /= used as f64);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn informative(n: usize, f: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, f, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n).map(|i| x[(i, 0)]).collect();
        (x, y)
    }

    #[test]
    fn constant_targets_give_leaves() {
        let (x, _) = informative(20, 3, 1);
        let y = vec![2.5; 20];
        let forest = rf_fit(&x, &y, ForestParams { n_trees: 10, ..Default::default() }).unwrap();
        assert!(forest.degenerate_targets);
        assert!(forest.trees.iter().all(RegressionTree::is_leaf));
        assert_eq!(forest.predict(&[0.0, 0.0, 0.0]), 2.5);
        assert_eq!(rf_importance(&forest), vec![0.0; 3]);
    }

    #[test]
    fn depth_is_bounded_and_splits_partition() {
        let (x, y) = informative(100, 4, 2);
        let forest = rf_fit(&x, &y, ForestParams { n_trees: 5, max_depth: 3, seed: 9 }).unwrap();
        for tree in &forest.trees {
            assert!(tree.depth() <= 3);
            for node in &tree.nodes {
                if let Some(s) = &node.split {
                    let (l, r) = (&tree.nodes[s.left], &tree.nodes[s.right]);
                    assert!(l.samples > 0 && r.samples > 0);
                    assert_eq!(l.samples + r.samples, node.samples);
                }
            }
        }
    }

    #[test]
    fn informative_feature_dominates() {
        let (x, y) = informative(200, 4, 3);
        let forest = rf_fit(&x, &y, ForestParams { n_trees: 30, max_depth: 5, seed: 0 }).unwrap();
        let imp = rf_importance(&forest);
        assert!(imp[0] >= 0.9, "{imp:?}");
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_feature_tie_goes_to_lowest_index() {
        let (mut x, y) = informative(200, 3, 4);
        for i in 0..200 {
            x[(i, 1)] = x[(i, 0)];
        }
        let forest = rf_fit(&x, &y, ForestParams { n_trees: 20, max_depth: 5, seed: 1 }).unwrap();
        let imp = rf_importance(&forest);
        assert!(imp[0] >= 0.9, "{imp:?}");
        assert_eq!(imp[1], 0.0);
    }

    #[test]
    fn input_validation() {
        let (x, y) = informative(4, 2, 5);
        assert!(matches!(rf_fit(&x, &y, ForestParams::default()), Err(Error::InsufficientRecords { .. })));
        let (x, _) = informative(10, 2, 5);
        assert!(matches!(rf_fit(&x, &[0.0; 9], ForestParams::default()), Err(Error::LengthMismatch(10, 9))));
    }
}
