use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::numeric::quantile;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mechanism {
    Mcar,
    Mar,
    Mnar,
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcar" => Ok(Self::Mcar),
            "mar" => Ok(Self::Mar),
            "mnar" => Ok(Self::Mnar),
            other => Err(Error::Config(format!("unknown missingness mechanism '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub mechanism: Mechanism,
    /// Target fraction of observed cells to mask in each selected feature.
    pub rate: f64,
    /// Fraction of features that receive synthetic missingness.
    pub feature_fraction: f64,
    pub seed: u64,
}

/// What an injection did, for dataset manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub spec: InjectionSpec,
    pub features: Vec<String>,
    /// MAR only: the covariate driving each selected feature's masking model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariates: Vec<String>,
    /// Fraction of previously observed cells masked, per selected feature.
    pub realized_rates: Vec<f64>,
}

/// Absolute slope of the MAR logistic masking model on the standardized covariate.
const MAR_SLOPE: f64 = 2.0;

/// Adds synthetic missingness to a random subset of features.
///
/// MCAR masks each observed cell independently. MAR masks with a logistic
/// model on a fully observed covariate whose intercept is found by bisection
/// so the expected rate matches `rate`. MNAR only masks values below the
/// lower or above the upper quartile of the column.
pub fn inject_missingness(dataset: &Dataset, spec: &InjectionSpec) -> Result<(Dataset, InjectionRecord)> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::Config(format!("rate {} outside [0, 1]", spec.rate)));
    }
    if !(spec.feature_fraction > 0.0 && spec.feature_fraction <= 1.0) {
        return Err(Error::Config(format!("feature fraction {} outside (0, 1]", spec.feature_fraction)));
    }
    let n = dataset.n_rows();
    let candidates: Vec<usize> = match spec.mechanism {
        Mechanism::Mnar => (0..dataset.n_cols())
            .filter(|&j| dataset.columns()[j].kind == ColumnKind::Numeric)
            .collect(),
        _ => (0..dataset.n_cols()).collect(),
    };
    if candidates.is_empty() {
        return Err(Error::Config(match spec.mechanism {
            Mechanism::Mnar => "MNAR needs numeric columns; quantiles are undefined for categoricals".into(),
            _ => "dataset has no features".into(),
        }));
    }
    let k = ((spec.feature_fraction * candidates.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = k.min(candidates.len());
    let mut rng = rng::seeded(spec.seed);
    let mut selected: Vec<usize> =
        sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
    selected.sort_unstable();

    let fully_observed: Vec<usize> = (0..dataset.n_cols())
        .filter(|&j| dataset.mask().column_missing_count(j) == 0)
        .collect();
    if spec.mechanism == Mechanism::Mar && fully_observed.is_empty() {
        return Err(Error::Config("MAR needs at least one fully observed feature".into()));
    }

    let mut values = dataset.values().clone();
    let mut covariates = Vec::new();
    let mut realized_rates = Vec::new();
    for &j in &selected {
        let observed: Vec<usize> = (0..n).filter(|&i| !dataset.mask().get(i, j)).collect();
        let probabilities: Vec<f64> = match spec.mechanism {
            Mechanism::Mcar => vec![spec.rate; observed.len()],
            Mechanism::Mar => {
                let preferred: Vec<usize> =
                    fully_observed.iter().copied().filter(|c| *c != j && !selected.contains(c)).collect();
                let pool: Vec<usize> = if preferred.is_empty() {
                    fully_observed.iter().copied().filter(|c| *c != j).collect()
                } else {
                    preferred
                };
                if pool.is_empty() {
                    return Err(Error::Config(format!(
                        "no fully observed covariate available for MAR on '{}'",
                        dataset.columns()[j].name
                    )));
                }
                let covariate = pool[rng.gen_range(0..pool.len())];
                let slope = if rng.gen_bool(0.5) { MAR_SLOPE } else { -MAR_SLOPE };
                covariates.push(dataset.columns()[covariate].name.clone());
                let z = standardized(&observed.iter().map(|&i| dataset.values().get(i, covariate)).collect::<Vec<_>>());
                mar_probabilities(&z, slope, spec.rate)
            }
            Mechanism::Mnar => {
                let column: Vec<f64> = observed.iter().map(|&i| dataset.values().get(i, j)).collect();
                let mut sorted = column.clone();
                sorted.sort_by(f64::total_cmp);
                let (q25, q75) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
                let tail: Vec<bool> = column.iter().map(|&v| v < q25 || v > q75).collect();
                let eligible = tail.iter().filter(|&&t| t).count();
                let p = if eligible == 0 {
                    0.0
                } else {
                    (spec.rate * observed.len() as f64 / eligible as f64).min(1.0)
                };
                tail.iter().map(|&t| if t { p } else { 0.0 }).collect()
            }
        };
        let mut masked = 0usize;
        for (&i, &p) in observed.iter().zip(&probabilities) {
            if spec.rate > 0.0 && rng.gen::<f64>() < p {
                values.set(i, j, f64::NAN);
                masked += 1;
            }
        }
        realized_rates.push(if observed.is_empty() { 0.0 } else { masked as f64 / observed.len() as f64 });
    }
    let record = InjectionRecord {
        spec: *spec,
        features: selected.iter().map(|&j| dataset.columns()[j].name.clone()).collect(),
        covariates,
        realized_rates,
    };
    Ok((dataset.with_values(values)?, record))
}

fn standardized(values: &[f64]) -> Vec<f64> {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let std = if std > 0.0 { std } else { 1.0 };
    values.iter().map(|v| (v - mean) / std).collect()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Per-row masking probabilities `sigmoid(b0 + slope * z)` with `b0` chosen so
/// their mean equals `rate`.
fn mar_probabilities(z: &[f64], slope: f64, rate: f64) -> Vec<f64> {
    if z.is_empty() || rate <= 0.0 {
        return vec![0.0; z.len()];
    }
    if rate >= 1.0 {
        return vec![1.0; z.len()];
    }
    let mean_rate = |b0: f64| z.iter().map(|&v| sigmoid(b0 + slope * v)).sum::<f64>() / z.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b0 = 0.5 * (lo + hi);
    z.iter().map(|&v| sigmoid(b0 + slope * v)).collect()
}
