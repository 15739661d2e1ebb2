//! Uniform fitting, prediction and serialization over the four estimators.

use serde::{Deserialize, Serialize};

use crate::dataset::ImputedDataset;
use crate::ensemble::{fit_ma_gbt, fit_ma_rf, Ensemble, EnsembleParams};
use crate::error::{Error, Result};
use crate::linear::{fit_ma_lasso, LassoFitParams, LinearModel, PenaltyScheme};
use crate::reliance::{empirical_reliance, Reliance, RelianceReport};
use crate::tree::{DecisionTree, MaxFeatures, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MaDt,
    MaLasso,
    MaRf,
    MaGbt,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::MaDt => "ma_dt",
            Estimator::MaLasso => "ma_lasso",
            Estimator::MaRf => "ma_rf",
            Estimator::MaGbt => "ma_gbt",
        }
    }

    pub fn is_tree_based(&self) -> bool {
        !matches!(self, Estimator::MaLasso)
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ma_dt" => Ok(Self::MaDt),
            "ma_lasso" => Ok(Self::MaLasso),
            "ma_rf" => Ok(Self::MaRf),
            "ma_gbt" => Ok(Self::MaGbt),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// One point of a hyperparameter grid. Fields an estimator does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub estimator: Estimator,
    pub alpha: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub beta: f64,
    pub scheme: PenaltyScheme,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl HyperParams {
    pub fn defaults(estimator: Estimator) -> Self {
        Self {
            estimator,
            alpha: 0.0,
            max_depth: 3,
            n_estimators: match estimator {
                Estimator::MaRf => 50,
                Estimator::MaGbt => 10,
                _ => 1,
            },
            learning_rate: 0.1,
            lambda: 0.01,
            beta: 1.0,
            scheme: PenaltyScheme::Scaled,
            min_samples_split: 2,
            max_features: match estimator {
                Estimator::MaRf => MaxFeatures::Sqrt,
                _ => MaxFeatures::All,
            },
            seed: 0,
        }
    }

    pub fn tree(&self) -> TreeParams {
        TreeParams {
            alpha: self.alpha,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_impurity_decrease: 0.0,
            max_features: self.max_features,
            seed: self.seed,
        }
    }

    pub fn lasso(&self) -> LassoFitParams {
        LassoFitParams {
            lambda: self.lambda,
            alpha: self.alpha,
            beta: self.beta,
            scheme: self.scheme,
            ..LassoFitParams::default()
        }
    }

    pub fn ensemble(&self) -> EnsembleParams {
        let mut p = match self.estimator {
            Estimator::MaGbt => {
                EnsembleParams::boosted(self.n_estimators, self.learning_rate, self.max_depth, self.alpha, self.seed)
            }
            _ => EnsembleParams::forest(self.n_estimators, self.max_depth, self.alpha, self.seed),
        };
        p.min_samples_split = self.min_samples_split;
        p.max_features = self.max_features;
        p
    }
}

/// Value lists per hyperparameter; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub alpha: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ParamGrid {
    /// Default search spaces per estimator.
    pub fn default_for(estimator: Estimator) -> Self {
        let tree_alpha = vec![0.001, 0.01, 0.1, 1.0, 10.0];
        match estimator {
            Estimator::MaDt => Self {
                alpha: tree_alpha,
                max_depth: (1..=9).collect(),
                learning_rate: vec![0.1],
                beta: vec![1.0],
                lambda: vec![0.01],
            },
            Estimator::MaRf => Self {
                alpha: tree_alpha,
                max_depth: (1..=7).collect(),
                learning_rate: vec![0.1],
                beta: vec![1.0],
                lambda: vec![0.01],
            },
            Estimator::MaGbt => Self {
                alpha: tree_alpha,
                max_depth: (1..=7).collect(),
                learning_rate: vec![0.01, 0.1],
                beta: vec![1.0],
                lambda: vec![0.01],
            },
            Estimator::MaLasso => Self {
                alpha: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
                max_depth: vec![1],
                learning_rate: vec![0.1],
                beta: vec![0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
                lambda: vec![0.01],
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
            || self.max_depth.is_empty()
            || self.learning_rate.is_empty()
            || self.beta.is_empty()
            || self.lambda.is_empty()
    }

    pub fn len(&self) -> usize {
        self.alpha.len() * self.max_depth.len() * self.learning_rate.len() * self.beta.len() * self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config("alpha values must be non-negative".into()));
        }
        if self.max_depth.contains(&0) {
            return Err(Error::Config("max_depth values must be at least 1".into()));
        }
        Ok(())
    }

    /// All grid points in lexicographic order of (alpha, max_depth,
    /// learning_rate, beta, lambda), filled in from `base`.
    pub fn points(&self, base: &HyperParams) -> Vec<HyperParams> {
        let mut out = Vec::with_capacity(self.len());
        for &alpha in &self.alpha {
            for &max_depth in &self.max_depth {
                for &learning_rate in &self.learning_rate {
                    for &beta in &self.beta {
                        for &lambda in &self.lambda {
                            out.push(HyperParams { alpha, max_depth, learning_rate, beta, lambda, ..*base });
                        }
                    }
                }
            }
        }
        out
    }
}

/// A fitted model of any estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Tree(DecisionTree),
    Linear(LinearModel),
    Ensemble(Ensemble),
}

impl Model {
    pub fn fit(data: &ImputedDataset, params: &HyperParams) -> Result<Self> {
        Ok(match params.estimator {
            Estimator::MaDt => Model::Tree(DecisionTree::fit(data, &params.tree())?),
            Estimator::MaLasso => Model::Linear(fit_ma_lasso(data, &params.lasso())?),
            Estimator::MaRf => Model::Ensemble(fit_ma_rf(data, &params.ensemble())?),
            Estimator::MaGbt => Model::Ensemble(fit_ma_gbt(data, &params.ensemble())?),
        })
    }

    /// Positive-class probability for an imputed row.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Linear(m) => m.predict(x),
            Model::Ensemble(e) => e.predict(x),
        }
    }

    pub fn predict_rows(&self, data: &ImputedDataset) -> Result<Vec<f64>> {
        (0..data.n_rows()).map(|i| self.predict(data.x.row(i))).collect()
    }

    pub fn reliance_report(&self, data: &ImputedDataset) -> Result<RelianceReport> {
        empirical_reliance(self, data)
    }
}

impl Reliance for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Tree(t) => t.n_features(),
            Model::Linear(m) => Reliance::n_features(m),
            Model::Ensemble(e) => e.n_features(),
        }
    }

    fn mark_used(&self, x: &[f64], used: &mut [bool]) {
        match self {
            Model::Tree(t) => t.mark_used(x, used),
            Model::Linear(m) => m.mark_used(x, used),
            Model::Ensemble(e) => e.mark_used(x, used),
        }
    }

    fn reliance(&self, x: &[f64], m: &[bool]) -> u8 {
        match self {
            Model::Tree(t) => t.reliance(x, m),
            Model::Linear(l) => l.reliance(x, m),
            Model::Ensemble(e) => e.reliance(x, m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn default_grid_sizes() {
        assert_eq!(ParamGrid::default_for(Estimator::MaDt).len(), 45);
        assert_eq!(ParamGrid::default_for(Estimator::MaGbt).len(), 70);
        assert_eq!(ParamGrid::default_for(Estimator::MaLasso).len(), 35);
    }

    #[test]
    fn grid_order() {
        let grid = ParamGrid { alpha: vec![0.0, 1.0], max_depth: vec![2, 3], ..ParamGrid::default_for(Estimator::MaDt) };
        let pts = grid.points(&HyperParams::defaults(Estimator::MaDt));
        let pairs: Vec<(f64, usize)> = pts.iter().map(|p| (p.alpha, p.max_depth)).collect();
        assert_eq!(pairs, vec![(0.0, 2), (0.0, 3), (1.0, 2), (1.0, 3)]);
    }

    #[test]
    fn empty_grid_rejected() {
        let grid = ParamGrid { alpha: vec![], ..ParamGrid::default_for(Estimator::MaDt) };
        assert!(grid.validate().is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels = (0..20).map(|i| (i >= 10) as u8).collect();
        let data = ImputedDataset::complete(Matrix::from_rows(&rows), labels);
        for est in [Estimator::MaDt, Estimator::MaLasso, Estimator::MaRf, Estimator::MaGbt] {
            let mut hp = HyperParams::defaults(est);
            hp.n_estimators = hp.n_estimators.min(3);
            hp.alpha = 1.0;
            let model = Model::fit(&data, &hp).unwrap();
            let json = serde_json::to_string(&model).unwrap();
            let back: Model = serde_json::from_str(&json).unwrap();
            assert_eq!(back, model, "{est}");
            assert!(model.predict(&[15.0, 1.0]).unwrap() > model.predict(&[2.0, 1.0]).unwrap());
        }
    }
}
