//! Missingness-avoiding random forests and gradient-boosted trees.

mod boost;

pub use boost::{fit_ma_gbt, fit_ma_gbt_traced, logloss_pseudo_residuals, update_sigma, BoostState};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ImputedDataset;
use crate::error::{contract, Error, Result};
use crate::numeric::sigmoid;
use crate::rng;
use crate::tree::{fit_tree, label_targets, DecisionTree, MaxFeatures, TreeInput, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Forest,
    Boosted,
}

/// Settings for both ensemble kinds. `max_features` and `bootstrap` apply to
/// forests, `learning_rate` to boosting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub alpha: f64,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub learning_rate: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn forest(n_estimators: usize, max_depth: usize, alpha: f64, seed: u64) -> Self {
        Self {
            n_estimators,
            max_depth,
            alpha,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            learning_rate: 1.0,
            bootstrap: true,
            seed,
        }
    }

    pub fn boosted(n_estimators: usize, learning_rate: f64, max_depth: usize, alpha: f64, seed: u64) -> Self {
        Self {
            n_estimators,
            max_depth,
            alpha,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            learning_rate,
            bootstrap: false,
            seed,
        }
    }

    fn tree_params(&self, seed: u64) -> TreeParams {
        TreeParams {
            alpha: self.alpha,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_impurity_decrease: 0.0,
            max_features: self.max_features,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        self.tree_params(self.seed).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    /// Initial log-odds (boosted); 0 for forests.
    pub base_score: f64,
    /// Learning rate (boosted); 1 for forests.
    pub gamma: f64,
    pub trees: Vec<DecisionTree>,
    pub params: Option<EnsembleParams>,
    pub seed: u64,
}

impl Ensemble {
    /// Forest or zero-base, unit-rate boosted ensemble over given trees.
    pub fn from_trees(kind: EnsembleKind, trees: Vec<DecisionTree>) -> Self {
        Self { kind, base_score: 0.0, gamma: 1.0, trees, params: None, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// The first `m` members.
    pub fn truncated(&self, m: usize) -> Self {
        Self { trees: self.trees[..m.min(self.trees.len())].to_vec(), ..self.clone() }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict_ensemble(self, x)
    }
}

/// Forest: mean member probability. Boosted: `sigmoid(base + gamma * sum_m h_m(x))`.
pub fn predict_ensemble(ens: &Ensemble, x: &[f64]) -> Result<f64> {
    if ens.trees.is_empty() {
        return contract("empty ensemble");
    }
    let mut total = 0.0;
    for tree in &ens.trees {
        total += tree.predict(x)?;
    }
    Ok(match ens.kind {
        EnsembleKind::Forest => total / ens.trees.len() as f64,
        EnsembleKind::Boosted => sigmoid(ens.base_score + ens.gamma * total),
    })
}

/// Bootstrap row multiset for tree `index`, with the seed for its feature draws.
fn tree_sample(seed: u64, index: usize, n: usize, bootstrap: bool) -> (Option<Vec<usize>>, u64) {
    let mut r = rng::substream(seed, index as u64);
    let rows = bootstrap.then(|| (0..n).map(|_| r.gen_range(0..n)).collect());
    (rows, r.gen())
}

/// Independent MA trees on bootstrap resamples with per-node feature
/// subsampling and sigma fixed at one.
pub fn fit_ma_rf(data: &ImputedDataset, params: &EnsembleParams) -> Result<Ensemble> {
    params.validate()?;
    let targets = label_targets(&data.labels);
    let n = data.n_rows();
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let (rows, tree_seed) = tree_sample(params.seed, t, n, params.bootstrap);
            let input = TreeInput { rows: rows.as_deref(), ..TreeInput::classification(data, &targets) };
            fit_tree(&input, &params.tree_params(tree_seed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        kind: EnsembleKind::Forest,
        base_score: 0.0,
        gamma: 1.0,
        trees,
        params: Some(*params),
        seed: params.seed,
    })
}

/// Bootstrap multiset used for tree `index` of a forest (exposed for tests).
pub fn bootstrap_rows(seed: u64, index: usize, n: usize) -> Vec<usize> {
    tree_sample(seed, index, n, true).0.expect("bootstrap enabled")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{Mask, Matrix};
    use crate::tree::{Node, NodeKind, Task};

    fn leaf(value: f64) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node { id: 0, kind: NodeKind::Leaf { value }, n_samples: 1 }],
            root: 0,
            params: TreeParams::default(),
            task: Task::Classify,
            n_features: 1,
        }
    }

    fn toy(n: usize) -> ImputedDataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 13) as f64, ((i * 7) % 5) as f64, (i % 3) as f64]).collect();
        let labels = rows.iter().map(|r| (r[0] + r[1] > 8.0) as u8).collect();
        let mut mask = Mask::new(n, 3);
        for i in (0..n).step_by(4) {
            mask.set(i, 1, true);
        }
        ImputedDataset::with_mask(Matrix::from_rows(&rows), mask, labels)
    }

    #[test]
    fn forest_prediction_rules() {
        let ens = Ensemble::from_trees(EnsembleKind::Forest, vec![leaf(0.2), leaf(0.8)]);
        assert!((predict_ensemble(&ens, &[0.0]).unwrap() - 0.5).abs() < 1e-15);
        let same = Ensemble::from_trees(EnsembleKind::Forest, vec![leaf(0.3), leaf(0.3)]);
        assert!((predict_ensemble(&same, &[0.0]).unwrap() - 0.3).abs() < 1e-15);
        assert!(predict_ensemble(&Ensemble::from_trees(EnsembleKind::Forest, vec![]), &[0.0]).is_err());
    }

    #[test]
    fn boosted_zero_trees_give_base() {
        let mut ens = Ensemble::from_trees(EnsembleKind::Boosted, vec![leaf(0.0), leaf(0.0)]);
        ens.base_score = 0.7;
        assert_eq!(predict_ensemble(&ens, &[1.0]).unwrap(), sigmoid(0.7));
    }

    #[test]
    fn degenerate_forest_is_single_tree() {
        let data = toy(60);
        let mut params = EnsembleParams::forest(1, 3, 0.5, 9);
        params.bootstrap = false;
        params.max_features = MaxFeatures::All;
        let forest = fit_ma_rf(&data, &params).unwrap();
        let single = DecisionTree::fit(&data, &TreeParams::with_alpha(0.5, 3)).unwrap();
        assert_eq!(forest.trees[0].nodes, single.nodes);
    }

    #[test]
    fn seeds_change_bootstrap() {
        assert_ne!(bootstrap_rows(1, 0, 50), bootstrap_rows(2, 0, 50));
        assert_ne!(bootstrap_rows(1, 0, 50), bootstrap_rows(1, 1, 50));
        assert_eq!(bootstrap_rows(1, 0, 50), bootstrap_rows(1, 0, 50));
    }

    #[test]
    fn forest_reproducible() {
        let data = toy(80);
        let params = EnsembleParams::forest(8, 4, 0.1, 3);
        let a = fit_ma_rf(&data, &params).unwrap();
        let b = fit_ma_rf(&data, &params).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_zero_estimators() {
        let data = toy(10);
        assert!(fit_ma_rf(&data, &EnsembleParams::forest(0, 3, 0.0, 0)).is_err());
    }
}
