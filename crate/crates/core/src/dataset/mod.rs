//! Tabular data with first-class missingness: loading, encoding, imputation,
//! synthetic missingness and stratified splitting.

mod csv_io;
mod encode;
mod impute;
mod inject;
mod split;

pub use csv_io::{load_csv, read_csv, write_csv, CsvOptions, DEFAULT_NA_TOKENS};
pub use encode::{encode, EncodedDataset, EncodedFeature, EncodedKind, Encoder, Standardization};
pub use impute::{impute, ImputeStrategy, ImputedDataset, Imputer, Preprocessor};
pub use inject::{inject_missingness, InjectionRecord, InjectionSpec, Mechanism};
pub use split::{kfold, train_test_indices, train_test_split, Fold, SplitIndices};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Mask, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Vocabulary of a categorical column; cells store the index into it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Numeric, categories: Vec::new() }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Categorical, categories }
    }
}

/// Raw feature table with a binary label per row.
///
/// Missing cells hold NaN in `values` and `true` in `mask`; the two always
/// agree. Categorical cells hold the category index as a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Column>,
    values: Matrix,
    mask: Mask,
    labels: Vec<u8>,
    label_name: String,
}

impl Dataset {
    pub fn new(
        columns: Vec<Column>,
        values: Matrix,
        labels: Vec<u8>,
        label_name: impl Into<String>,
    ) -> Result<Self> {
        if values.cols() != columns.len() {
            return Err(Error::Schema(format!(
                "{} columns declared but rows have {} cells",
                columns.len(),
                values.cols()
            )));
        }
        if labels.len() != values.rows() {
            return Err(Error::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                values.rows()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Schema(format!("label at row {i} is not binary")));
        }
        for (j, column) in columns.iter().enumerate() {
            if column.kind != ColumnKind::Categorical {
                continue;
            }
            for i in 0..values.rows() {
                let v = values.get(i, j);
                if v.is_nan() {
                    continue;
                }
                if v < 0.0 || v.fract() != 0.0 || v as usize >= column.categories.len() {
                    return Err(Error::Schema(format!(
                        "row {i}: category id {v} out of range for column '{}'",
                        column.name
                    )));
                }
            }
        }
        let mask = Mask::from_nan(&values);
        Ok(Self { columns, values, mask, labels, label_name: label_name.into() })
    }

    /// Dataset of numeric columns named `x0, x1, ...`.
    pub fn from_numeric(values: Matrix, labels: Vec<u8>) -> Result<Self> {
        let columns = (0..values.cols()).map(|j| Column::numeric(format!("x{j}"))).collect();
        Self::new(columns, values, labels, "y")
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            columns: self.columns.clone(),
            values: self.values.select_rows(indices),
            mask: self.mask.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_name: self.label_name.clone(),
        }
    }

    /// Same schema and labels with replaced cell values; the mask is rederived.
    pub fn with_values(&self, values: Matrix) -> Result<Self> {
        Self::new(self.columns.clone(), values, self.labels.clone(), self.label_name.clone())
    }

    /// Checks the mask/NA invariant.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n_rows() {
            for j in 0..self.n_cols() {
                if self.mask.get(i, j) != self.values.get(i, j).is_nan() {
                    return Err(Error::Contract(format!("mask disagrees with cell ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            label: self.label_name.clone(),
            n_rows: self.n_rows(),
            columns: self.columns.clone(),
            provenance: Vec::new(),
        }
    }
}

/// JSON sidecar describing a dataset file and how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub label: String,
    pub n_rows: usize,
    pub columns: Vec<Column>,
    #[serde(default)]
    pub provenance: Vec<serde_json::Value>,
}
