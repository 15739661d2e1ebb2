use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_NA_TOKENS: [&str; 4] = ["", "na", "NA", "NaN"];

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label: String,
    /// Column kinds that override inference.
    pub kinds: BTreeMap<String, ColumnKind>,
    pub na_tokens: BTreeSet<String>,
}

impl CsvOptions {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            kinds: BTreeMap::new(),
            na_tokens: DEFAULT_NA_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    read_csv(File::open(path)?, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = header
        .iter()
        .position(|h| *h == options.label)
        .ok_or_else(|| Error::MissingColumn(options.label.clone()))?;

    let mut cells: Vec<Vec<Option<String>>> = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut out = Vec::with_capacity(header.len() - 1);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(parse_label(field, row, &options.na_tokens)?);
            } else if options.na_tokens.contains(field) {
                out.push(None);
            } else {
                out.push(Some(field.to_string()));
            }
        }
        cells.push(out);
    }

    let names: Vec<&String> =
        header.iter().enumerate().filter(|(j, _)| *j != label_idx).map(|(_, h)| h).collect();
    let n = cells.len();
    let d = names.len();
    let mut columns = Vec::with_capacity(d);
    let mut values = Matrix::filled(n, d, f64::NAN);
    for (j, name) in names.iter().enumerate() {
        let column_cells = cells.iter().map(|r| r[j].as_deref());
        let inferred = if column_cells.clone().flatten().all(|s| s.parse::<f64>().is_ok()) {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        };
        let kind = options.kinds.get(name.as_str()).copied().unwrap_or(inferred);
        match kind {
            ColumnKind::Numeric => {
                for (i, cell) in column_cells.enumerate() {
                    if let Some(s) = cell {
                        let v: f64 = s.parse().map_err(|_| Error::Parse {
                            row: i,
                            message: format!("'{s}' in numeric column '{name}'"),
                        })?;
                        if v.is_nan() {
                            return Err(Error::Parse {
                                row: i,
                                message: format!("NaN literal in column '{name}' is not a declared NA token"),
                            });
                        }
                        values.set(i, j, v);
                    }
                }
                columns.push(Column::numeric(name.as_str()));
            }
            ColumnKind::Categorical => {
                let vocabulary: BTreeSet<&str> = column_cells.clone().flatten().collect();
                let categories: Vec<String> = vocabulary.iter().map(|s| s.to_string()).collect();
                for (i, cell) in column_cells.enumerate() {
                    if let Some(s) = cell {
                        let id = categories.iter().position(|c| c == s).expect("vocabulary");
                        values.set(i, j, id as f64);
                    }
                }
                columns.push(Column::categorical(name.as_str(), categories));
            }
        }
    }
    Dataset::new(columns, values, labels, options.label.clone())
}

fn parse_label(field: &str, row: usize, na_tokens: &BTreeSet<String>) -> Result<u8> {
    if na_tokens.contains(field) {
        return Err(Error::Schema(format!("label missing at row {row}")));
    }
    match field.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(Error::Schema(format!("non-binary label '{field}' at row {row}"))),
    }
}

/// Writes features then the label column. Missing cells are written as `NA`.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.columns().iter().map(|c| c.name.as_str()).collect();
    header.push(dataset.label_name());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..dataset.n_rows() {
        record.clear();
        for (j, column) in dataset.columns().iter().enumerate() {
            let v = dataset.values().get(i, j);
            record.push(if v.is_nan() {
                "NA".to_string()
            } else if column.kind == ColumnKind::Categorical {
                column.categories[v as usize].clone()
            } else {
                format!("{v}")
            });
        }
        record.push(dataset.labels()[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
