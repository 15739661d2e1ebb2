use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::matrix::{Mask, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncodedKind {
    Numeric { scale: Option<Standardization> },
    /// One-hot indicator for `category` of the source column.
    Indicator { category: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub name: String,
    /// Index of the source column in the raw dataset.
    pub source: usize,
    pub kind: EncodedKind,
}

/// Encoding fitted on a training dataset and reusable on test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub source_columns: Vec<Column>,
    pub features: Vec<EncodedFeature>,
    /// Numeric columns whose standard deviation was zero (or undefined) and clamped to 1.
    pub clamped_columns: Vec<String>,
}

/// Numeric feature matrix after one-hot expansion and optional standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub features: Vec<EncodedFeature>,
    pub x: Matrix,
    pub mask: Mask,
    pub labels: Vec<u8>,
}

impl EncodedDataset {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn standardization(&self) -> Vec<Option<Standardization>> {
        self.features
            .iter()
            .map(|f| match f.kind {
                EncodedKind::Numeric { scale } => scale,
                EncodedKind::Indicator { .. } => None,
            })
            .collect()
    }
}

impl Encoder {
    pub fn fit(dataset: &Dataset, standardize: bool) -> Self {
        let mut features = Vec::new();
        let mut clamped_columns = Vec::new();
        for (j, column) in dataset.columns().iter().enumerate() {
            match column.kind {
                ColumnKind::Numeric => {
                    let scale = standardize.then(|| {
                        let observed: Vec<f64> = dataset
                            .values()
                            .column(j)
                            .into_iter()
                            .filter(|v| !v.is_nan())
                            .collect();
                        let (mean, std) = mean_std(&observed);
                        if std > 0.0 && std.is_finite() {
                            Standardization { mean, std }
                        } else {
                            clamped_columns.push(column.name.clone());
                            Standardization { mean, std: 1.0 }
                        }
                    });
                    features.push(EncodedFeature {
                        name: column.name.clone(),
                        source: j,
                        kind: EncodedKind::Numeric { scale },
                    });
                }
                ColumnKind::Categorical => {
                    for (c, category) in column.categories.iter().enumerate() {
                        features.push(EncodedFeature {
                            name: format!("{}={}", column.name, category),
                            source: j,
                            kind: EncodedKind::Indicator { category: c },
                        });
                    }
                }
            }
        }
        Self { source_columns: dataset.columns().to_vec(), features, clamped_columns }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<EncodedDataset> {
        if dataset.columns() != self.source_columns.as_slice() {
            return Err(Error::Contract("dataset schema differs from the fitted encoder".into()));
        }
        let n = dataset.n_rows();
        let mut x = Matrix::zeros(n, self.features.len());
        for i in 0..n {
            for (k, feature) in self.features.iter().enumerate() {
                let raw = dataset.values().get(i, feature.source);
                let v = if raw.is_nan() {
                    f64::NAN
                } else {
                    match feature.kind {
                        EncodedKind::Numeric { scale: Some(s) } => s.apply(raw),
                        EncodedKind::Numeric { scale: None } => raw,
                        EncodedKind::Indicator { category } => {
                            if raw as usize == category {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    }
                };
                x.set(i, k, v);
            }
        }
        let mask = Mask::from_nan(&x);
        Ok(EncodedDataset {
            features: self.features.clone(),
            x,
            mask,
            labels: dataset.labels().to_vec(),
        })
    }

    /// Recovers the category id of an observed one-hot group, if the row is observed.
    pub fn decode_category(&self, row: &[f64], source: usize) -> Option<usize> {
        self.features.iter().zip(row).find_map(|(f, &v)| match f.kind {
            EncodedKind::Indicator { category } if f.source == source && v == 1.0 => Some(category),
            _ => None,
        })
    }

    /// Maps a raw-scale value of a numeric source column to the encoded scale.
    pub fn encoded_index(&self, source: usize) -> Option<(usize, Option<Standardization>)> {
        self.features.iter().enumerate().find_map(|(k, f)| match f.kind {
            EncodedKind::Numeric { scale } if f.source == source => Some((k, scale)),
            _ => None,
        })
    }
}

/// Fits an encoder on `dataset` and applies it.
pub fn encode(dataset: &Dataset, standardize: bool) -> (Encoder, EncodedDataset) {
    let encoder = Encoder::fit(dataset, standardize);
    let encoded = encoder.transform(dataset).expect("encoder fitted on the same schema");
    (encoder, encoded)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(values: Vec<f64>) -> Dataset {
        let n = values.len();
        Dataset::from_numeric(Matrix::from_vec(n, 1, values), vec![0; n]).unwrap()
    }

    #[test]
    fn standardizes_on_observed_values() {
        let (encoder, enc) = encode(&numeric(vec![2.0, f64::NAN, 4.0]), true);
        assert_eq!(enc.x.get(0, 0), -1.0);
        assert!(enc.x.get(1, 0).is_nan());
        assert_eq!(enc.x.get(2, 0), 1.0);
        assert!(enc.mask.get(1, 0));
        assert_eq!(
            encoder.features[0].kind,
            EncodedKind::Numeric { scale: Some(Standardization { mean: 3.0, std: 1.0 }) }
        );
    }

    #[test]
    fn constant_column_is_clamped() {
        let (encoder, enc) = encode(&numeric(vec![5.0, 5.0, 5.0]), true);
        assert_eq!(encoder.clamped_columns, vec!["x0".to_string()]);
        assert_eq!(enc.x.get(0, 0), 0.0);
    }

    #[test]
    fn standardized_input_is_fixed_point() {
        let raw = vec![-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        let (_, enc) = encode(&numeric(raw.clone()), true);
        for (i, v) in raw.iter().enumerate() {
            assert!((enc.x.get(i, 0) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_propagates_mask() {
        let columns = vec![Column::categorical("color", vec!["blue".into(), "red".into()])];
        let values = Matrix::from_vec(3, 1, vec![1.0, f64::NAN, 0.0]);
        let ds = Dataset::new(columns, values, vec![0, 1, 0], "y").unwrap();
        let (encoder, enc) = encode(&ds, true);
        assert_eq!(enc.feature_names(), vec!["color=blue", "color=red"]);
        assert_eq!(enc.x.row(0), &[0.0, 1.0]);
        assert!(enc.x.row(1).iter().all(|v| v.is_nan()));
        assert_eq!(enc.mask.row(1), &[true, true]);
        assert_eq!(enc.x.row(2), &[1.0, 0.0]);
        assert_eq!(encoder.decode_category(enc.x.row(0), 0), Some(1));
        assert_eq!(encoder.decode_category(enc.x.row(2), 0), Some(0));
        assert_eq!(encoder.decode_category(enc.x.row(1), 0), None);
    }
}
