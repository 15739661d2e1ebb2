use serde::{Deserialize, Serialize};

use super::{Dataset, EncodedDataset, EncodedKind, Encoder};
use crate::error::{Error, Result};
use crate::matrix::{Mask, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    /// Missing numeric cells become 0 (the observed mean after standardization).
    Zero,
    /// Missing numeric cells become the training mean.
    MeanMode,
}

impl std::str::FromStr for ImputeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "mean_mode" | "mean" => Ok(Self::MeanMode),
            other => Err(Error::Config(format!("unknown imputation strategy '{other}'"))),
        }
    }
}

/// Imputation statistics learned on training data. Categorical groups are
/// always filled with the training mode pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub strategy: ImputeStrategy,
    pub fill_values: Vec<f64>,
}

/// Encoded data with every missing cell filled. `mask` still records which
/// cells were originally missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedDataset {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub mask: Mask,
    pub labels: Vec<u8>,
    pub strategy: ImputeStrategy,
    pub fill_values: Vec<f64>,
}

impl ImputedDataset {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Complete data with an empty mask; handy for tests and fully observed inputs.
    pub fn complete(x: Matrix, labels: Vec<u8>) -> Self {
        let d = x.cols();
        Self {
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
            mask: Mask::new(x.rows(), d),
            x,
            labels,
            strategy: ImputeStrategy::Zero,
            fill_values: vec![0.0; d],
        }
    }

    /// Pairs imputed values with an explicit mask.
    pub fn with_mask(x: Matrix, mask: Mask, labels: Vec<u8>) -> Self {
        let mut ds = Self::complete(x, labels);
        assert_eq!((mask.rows(), mask.cols()), (ds.x.rows(), ds.x.cols()));
        ds.mask = mask;
        ds
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(indices),
            mask: self.mask.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            strategy: self.strategy,
            fill_values: self.fill_values.clone(),
        }
    }
}

impl Imputer {
    pub fn fit(data: &EncodedDataset, strategy: ImputeStrategy) -> Self {
        let n = data.x.rows();
        let mut fill_values = vec![0.0; data.features.len()];
        for (k, feature) in data.features.iter().enumerate() {
            fill_values[k] = match feature.kind {
                EncodedKind::Numeric { .. } => match strategy {
                    ImputeStrategy::Zero => 0.0,
                    ImputeStrategy::MeanMode => {
                        let observed: Vec<f64> =
                            (0..n).map(|i| data.x.get(i, k)).filter(|v| !v.is_nan()).collect();
                        if observed.is_empty() {
                            0.0
                        } else {
                            observed.iter().sum::<f64>() / observed.len() as f64
                        }
                    }
                },
                EncodedKind::Indicator { .. } => 0.0,
            };
        }
        // Mode pattern of each one-hot group: count ones per indicator and pick the largest
        // (lowest category on ties).
        let mut best: Vec<(usize, usize, usize)> = Vec::new(); // (source, feature, count)
        for (k, feature) in data.features.iter().enumerate() {
            if let EncodedKind::Indicator { .. } = feature.kind {
                let count = (0..n).filter(|&i| data.x.get(i, k) == 1.0).count();
                match best.iter_mut().find(|(s, _, _)| *s == feature.source) {
                    Some(entry) if count > entry.2 => *entry = (feature.source, k, count),
                    Some(_) => {}
                    None => best.push((feature.source, k, count)),
                }
            }
        }
        for (_, k, count) in best {
            if count > 0 {
                fill_values[k] = 1.0;
            }
        }
        Self { strategy, fill_values }
    }

    pub fn transform(&self, data: &EncodedDataset) -> Result<ImputedDataset> {
        if data.x.cols() != self.fill_values.len() {
            return Err(Error::Contract(format!(
                "imputer fitted on {} features, data has {}",
                self.fill_values.len(),
                data.x.cols()
            )));
        }
        let mut x = data.x.clone();
        for i in 0..x.rows() {
            for k in 0..x.cols() {
                if data.mask.get(i, k) {
                    x.set(i, k, self.fill_values[k]);
                }
            }
        }
        Ok(ImputedDataset {
            feature_names: data.feature_names(),
            x,
            mask: data.mask.clone(),
            labels: data.labels.clone(),
            strategy: self.strategy,
            fill_values: self.fill_values.clone(),
        })
    }
}

/// Fits an imputer on `data` and applies it.
pub fn impute(data: &EncodedDataset, strategy: ImputeStrategy) -> ImputedDataset {
    Imputer::fit(data, strategy).transform(data).expect("imputer fitted on the same data")
}

/// Encoder and imputer fitted together on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub encoder: Encoder,
    pub imputer: Imputer,
}

impl Preprocessor {
    pub fn fit(train: &Dataset, standardize: bool, strategy: ImputeStrategy) -> Self {
        let encoder = Encoder::fit(train, standardize);
        let encoded = encoder.transform(train).expect("same schema");
        let imputer = Imputer::fit(&encoded, strategy);
        Self { encoder, imputer }
    }

    pub fn transform(&self, data: &Dataset) -> Result<ImputedDataset> {
        self.imputer.transform(&self.encoder.transform(data)?)
    }
}
