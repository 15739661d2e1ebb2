//! Missingness-avoiding decision trees.
//!
//! Trees are grown greedily. Each split minimizes the weighted child impurity
//! (Gini for classification, squared error for regression) plus `alpha` times
//! the fraction of the node's rows for which the split feature is missing,
//! optionally discounted per row and feature by sigma weights.

mod dot;
mod split;

pub use dot::{node_missingness, to_dot};
pub use split::{gini, gini_counts, split_penalty, Split, SplitData};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dataset::ImputedDataset;
use crate::error::{contract, Error, Result};
use crate::matrix::{Mask, Matrix};
use crate::rng;
use split::{best_split_among, node_stats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Regress,
}

/// Number of features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn count(&self, d: usize) -> usize {
        let k = match *self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Fraction(f) => (f * d as f64 - 1e-9).ceil() as usize,
        };
        k.clamp(1.min(d), d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Weight of the missingness penalty.
    pub alpha: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_impurity_decrease: f64,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            max_depth: 3,
            min_samples_split: 2,
            min_impurity_decrease: 0.0,
            max_features: MaxFeatures::All,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn with_alpha(alpha: f64, max_depth: usize) -> Self {
        Self { alpha, max_depth, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(Error::Config("min_impurity_decrease must be non-negative".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("feature fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-row, per-feature binary penalty multipliers. All ones for a single tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaWeights {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl SigmaWeights {
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![true; rows * cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[i * self.cols + j] = value;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn zeros(&self) -> usize {
        self.bits.iter().filter(|b| !**b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeKind {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    #[serde(flatten)]
    pub kind: NodeKind,
    /// Training rows routed to this node (bootstrap repeats counted).
    pub n_samples: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub params: TreeParams,
    pub task: Task,
    pub n_features: usize,
}

/// Training inputs for [`fit_tree`].
#[derive(Debug, Clone, Copy)]
pub struct TreeInput<'a> {
    pub data: SplitData<'a>,
    /// Rows to grow from, repeats allowed (bootstrap). Defaults to every row once.
    pub rows: Option<&'a [usize]>,
}

impl<'a> TreeInput<'a> {
    pub fn classification(data: &'a ImputedDataset, targets: &'a [f64]) -> Self {
        Self { data: SplitData::new(&data.x, &data.mask, targets, Task::Classify), rows: None }
    }

    pub fn new(x: &'a Matrix, mask: &'a Mask, targets: &'a [f64], task: Task) -> Self {
        Self { data: SplitData::new(x, mask, targets, task), rows: None }
    }
}

/// Labels as `0.0 / 1.0` targets for classification trees.
pub fn label_targets(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&y| y as f64).collect()
}

/// Best split of `samples` over all features, with the tree's tie-breaking
/// rule: lowest score, then lowest feature index, then lowest threshold.
pub fn best_split(samples: &[usize], data: &SplitData, params: &TreeParams) -> Option<Split> {
    let features: Vec<usize> = (0..data.x.cols()).collect();
    best_split_among(samples, data, params.alpha, params.min_impurity_decrease, &features, &mut Vec::new())
}

/// Grows a tree greedily, depth first.
pub fn fit_tree(input: &TreeInput, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    let data = &input.data;
    let n = data.x.rows();
    let d = data.x.cols();
    if data.targets.len() != n || data.mask.rows() != n || data.mask.cols() != d {
        return contract("inconsistent data, mask and target dimensions");
    }
    if let Some(w) = data.sample_weight {
        if w.len() != n {
            return contract("sample weight length differs from row count");
        }
    }
    if let Some(s) = data.sigma {
        if s.rows() != n || s.cols() != d {
            return contract("sigma dimensions differ from the data");
        }
    }
    if data.x.as_slice().iter().any(|v| v.is_nan()) {
        return contract("tree fitting needs imputed data");
    }
    let rows: Vec<usize> = match input.rows {
        Some(r) => r.to_vec(),
        None => (0..n).collect(),
    };
    if rows.is_empty() || d == 0 {
        return contract("cannot fit a tree on empty data");
    }
    let mut builder = Builder {
        data,
        params,
        nodes: Vec::new(),
        rng: rng::seeded(params.seed),
        n_candidates: params.max_features.count(d),
        scratch: Vec::new(),
    };
    let root = builder.grow(rows, 0);
    Ok(DecisionTree { nodes: builder.nodes, root, params: *params, task: data.task, n_features: d })
}

struct Builder<'a, 'b> {
    data: &'b SplitData<'a>,
    params: &'b TreeParams,
    nodes: Vec<Node>,
    rng: rng::Rng,
    n_candidates: usize,
    scratch: Vec<(f64, usize)>,
}

impl Builder<'_, '_> {
    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let stats = node_stats(&samples, self.data);
        let id = self.nodes.len();
        self.nodes.push(Node { id, kind: NodeKind::Leaf { value: stats.mean() }, n_samples: samples.len() });

        let pure = stats.impurity(self.data.task) <= split::MIN_GAIN;
        if depth >= self.params.max_depth || samples.len() < self.params.min_samples_split || pure {
            return id;
        }
        let d = self.data.x.cols();
        let features: Vec<usize> = if self.n_candidates < d {
            let mut f = sample(&mut self.rng, d, self.n_candidates).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..d).collect()
        };
        let Some(split) = best_split_among(
            &samples,
            self.data,
            self.params.alpha,
            self.params.min_impurity_decrease,
            &features,
            &mut self.scratch,
        ) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.into_iter().partition(|&i| self.data.x.get(i, split.feature) <= split.threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[id].kind =
            NodeKind::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

impl DecisionTree {
    /// Classification tree with sigma all ones.
    pub fn fit(data: &ImputedDataset, params: &TreeParams) -> Result<Self> {
        let targets = label_targets(&data.labels);
        fit_tree(&TreeInput::classification(data, &targets), params)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(tree: &DecisionTree, id: usize) -> usize {
            match tree.nodes[id].kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Split { left, right, .. } => 1 + walk(tree, left).max(walk(tree, right)),
            }
        }
        walk(self, self.root)
    }

    /// Node ids from the root to the leaf reached by `x`: left when
    /// `x[feature] <= threshold`, right otherwise.
    pub fn decision_path(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_row(x)?;
        let mut path = Vec::with_capacity(8);
        let mut id = self.root;
        loop {
            path.push(id);
            match self.nodes[id].kind {
                NodeKind::Leaf { .. } => return Ok(path),
                NodeKind::Split { feature, threshold, left, right } => {
                    let v = x[feature];
                    if v.is_nan() {
                        return contract(format!("NA in routed feature {feature}; predict on imputed rows"));
                    }
                    id = if v <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let leaf = *self.decision_path(x)?.last().expect("non-empty path");
        match self.nodes[leaf].kind {
            NodeKind::Leaf { value } => Ok(value),
            NodeKind::Split { .. } => unreachable!("paths end at leaves"),
        }
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    /// Visits the internal nodes on the path of `x` as `(feature, node id)`.
    /// Rows are assumed imputed; NaN routes right.
    pub(crate) fn for_each_split_on_path(&self, x: &[f64], mut visit: impl FnMut(usize, usize)) {
        let mut id = self.root;
        while let NodeKind::Split { feature, threshold, left, right } = self.nodes[id].kind {
            visit(feature, id);
            id = if x[feature] <= threshold { left } else { right };
        }
    }

    /// Leaf value reached by an imputed row, without validation.
    pub(crate) fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut id = self.root;
        loop {
            match self.nodes[id].kind {
                NodeKind::Leaf { value } => return value,
                NodeKind::Split { feature, threshold, left, right } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub(crate) fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return contract(format!("row has {} features, tree expects {}", x.len(), self.n_features));
        }
        Ok(())
    }

    /// Features used by any internal node.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Split { feature, .. } => Some(feature),
                NodeKind::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<(usize, bool)>> {
        let mut parents = vec![None; self.nodes.len()];
        for node in &self.nodes {
            if let NodeKind::Split { left, right, .. } = node.kind {
                parents[left] = Some((node.id, false));
                parents[right] = Some((node.id, true));
            }
        }
        parents
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> DecisionTree {
        DecisionTree {
            nodes: vec![
                Node { id: 0, kind: NodeKind::Split { feature: 0, threshold: 0.5, left: 1, right: 2 }, n_samples: 4 },
                Node { id: 1, kind: NodeKind::Leaf { value: 0.25 }, n_samples: 2 },
                Node { id: 2, kind: NodeKind::Leaf { value: 0.75 }, n_samples: 2 },
            ],
            root: 0,
            params: TreeParams::default(),
            task: Task::Classify,
            n_features: 1,
        }
    }

    #[test]
    fn routing_rule() {
        let tree = stump();
        assert_eq!(tree.decision_path(&[0.7]).unwrap(), vec![0, 2]);
        assert_eq!(tree.predict(&[0.7]).unwrap(), 0.75);
        assert_eq!(tree.decision_path(&[0.5]).unwrap(), vec![0, 1]);
        assert!(tree.predict(&[f64::NAN]).is_err());
        assert!(tree.predict(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn single_leaf_path() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        let data = ImputedDataset::complete(x, vec![1, 1]);
        let tree = DecisionTree::fit(&data, &TreeParams::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.decision_path(&[5.0]).unwrap(), vec![0]);
        assert_eq!(tree.predict(&[5.0]).unwrap(), 1.0);
    }

    #[test]
    fn depth_cap_gives_stump() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let data = ImputedDataset::complete(x, vec![0, 0, 1, 1]);
        let tree = DecisionTree::fit(&data, &TreeParams::with_alpha(0.0, 1)).unwrap();
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.node(0).kind, NodeKind::Split { feature: 0, threshold: 1.5, left: 1, right: 2 });
    }

    #[test]
    fn empty_data_is_error() {
        let data = ImputedDataset::complete(Matrix::zeros(0, 2), vec![]);
        assert!(DecisionTree::fit(&data, &TreeParams::default()).is_err());
    }

    #[test]
    fn invalid_params() {
        let data = ImputedDataset::complete(Matrix::zeros(2, 1), vec![0, 1]);
        let params = TreeParams { max_depth: 0, ..TreeParams::default() };
        assert!(matches!(DecisionTree::fit(&data, &params), Err(Error::Config(_))));
    }

    #[test]
    fn regression_leaves_are_means() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let mask = Mask::new(4, 1);
        let targets = [1.0, 3.0, 10.0, 12.0];
        let tree = fit_tree(&TreeInput::new(&x, &mask, &targets, Task::Regress), &TreeParams::with_alpha(0.0, 1)).unwrap();
        assert_eq!(tree.predict(&[0.0]).unwrap(), 2.0);
        assert_eq!(tree.predict(&[3.0]).unwrap(), 11.0);
    }

    #[test]
    fn bootstrap_rows_count_repeats() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let data = ImputedDataset::complete(x, vec![0, 1]);
        let targets = label_targets(&data.labels);
        let rows = [0, 0, 0, 1];
        let input = TreeInput { rows: Some(&rows), ..TreeInput::classification(&data, &targets) };
        let tree = fit_tree(&input, &TreeParams::with_alpha(0.0, 1)).unwrap();
        assert_eq!(tree.node(0).n_samples, 4);
        assert_eq!(tree.node(1).n_samples, 3);
    }

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(40), 7);
        assert_eq!(MaxFeatures::All.count(5), 5);
        assert_eq!(MaxFeatures::Fraction(0.5).count(5), 3);
        assert_eq!(MaxFeatures::Fraction(0.01).count(5), 1);
    }
}
