//! Gradient boosting on log loss with reliance weights that exempt features
//! already used on a row's path in earlier trees.

use serde::{Deserialize, Serialize};

use super::{Ensemble, EnsembleKind, EnsembleParams};
use crate::dataset::ImputedDataset;
use crate::error::{contract, Result};
use crate::numeric::{logit, sigmoid};
use crate::rng;
use crate::tree::{fit_tree, DecisionTree, SigmaWeights, SplitData, Task, TreeInput};
use rand::Rng as _;

/// Snapshot after a boosting iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostState {
    pub sigma: SigmaWeights,
    pub current_scores: Vec<f64>,
    pub iteration: usize,
}

/// `y_i - sigmoid(margin_i)`, the negative log-loss gradient in the margin.
pub fn logloss_pseudo_residuals(labels: &[u8], margins: &[f64]) -> Vec<f64> {
    labels.iter().zip(margins).map(|(&y, &z)| y as f64 - sigmoid(z)).collect()
}

/// Zeroes `sigma[i][j]` where feature `j` is on the path of row `i` in `tree`
/// and the cell is missing. Paths are traced on the rows of `data`.
pub fn update_sigma(sigma: &SigmaWeights, tree: &DecisionTree, data: &ImputedDataset) -> SigmaWeights {
    let mut out = sigma.clone();
    for i in 0..data.n_rows() {
        tree.for_each_split_on_path(data.x.row(i), |j, _| {
            if data.mask.get(i, j) {
                out.set(i, j, false);
            }
        });
    }
    out
}

pub fn fit_ma_gbt(data: &ImputedDataset, params: &EnsembleParams) -> Result<Ensemble> {
    fit_ma_gbt_traced(data, params).map(|(e, _)| e)
}

/// Boosted fit that also returns the state after each iteration.
pub fn fit_ma_gbt_traced(data: &ImputedDataset, params: &EnsembleParams) -> Result<(Ensemble, Vec<BoostState>)> {
    params.validate()?;
    if !(params.learning_rate >= 0.0) {
        return contract("learning rate must be non-negative");
    }
    let n = data.n_rows();
    let d = data.n_features();
    if n == 0 {
        return contract("cannot boost on zero rows");
    }
    let rate = data.labels.iter().map(|&y| y as f64).sum::<f64>() / n as f64;
    if rate <= 0.0 || rate >= 1.0 {
        return contract("base rate is 0 or 1; log-odds undefined");
    }
    let base = logit(rate);
    let mut margins = vec![base; n];
    let mut sigma = SigmaWeights::ones(n, d);
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut states = Vec::with_capacity(params.n_estimators);
    let mut seeds = rng::seeded(params.seed);
    for m in 0..params.n_estimators {
        let residuals = logloss_pseudo_residuals(&data.labels, &margins);
        let split_data = SplitData {
            sigma: Some(&sigma),
            ..SplitData::new(&data.x, &data.mask, &residuals, Task::Regress)
        };
        let tree = fit_tree(&TreeInput { data: split_data, rows: None }, &params.tree_params(seeds.gen()))?;
        for (i, z) in margins.iter_mut().enumerate() {
            *z += params.learning_rate * tree.leaf_value(data.x.row(i));
        }
        sigma = update_sigma(&sigma, &tree, data);
        trees.push(tree);
        states.push(BoostState { sigma: sigma.clone(), current_scores: margins.clone(), iteration: m + 1 });
    }
    let ens = Ensemble {
        kind: EnsembleKind::Boosted,
        base_score: base,
        gamma: params.learning_rate,
        trees,
        params: Some(*params),
        seed: params.seed,
    };
    Ok((ens, states))
}
