//! Run settings shared by `train` and `sweep`, read from flags and an
//! optional TOML file. Flags win over the file; the file wins over defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, CsvOptions, Dataset, ImputeStrategy};
use crate::error::{Error, Result};
use crate::eval::{Pipeline, SelectionMode, SweepConfig};
use crate::linear::PenaltyScheme;
use crate::model::{Estimator, ParamGrid};
use crate::oddc::{generate, OddcProcess};
use crate::tree::MaxFeatures;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate the input instead: `clinic` or a process spec JSON file.
    #[arg(long, conflicts_with = "data")]
    pub synth: Option<String>,
    /// Rows to generate with --synth.
    #[arg(long)]
    pub n: Option<usize>,
    /// Name of the binary label column.
    #[arg(long)]
    pub label: Option<String>,
    /// ma_dt | ma_lasso | ma_rf | ma_gbt
    #[arg(long)]
    pub estimator: Option<Estimator>,
    /// zero | mean_mode
    #[arg(long)]
    pub impute: Option<ImputeStrategy>,
    /// Standardize numeric features (default true).
    #[arg(long)]
    pub standardize: Option<bool>,
    /// Missingness penalty strengths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Tree depths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub max_depth: Option<Vec<usize>>,
    /// Boosting learning rates, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub learning_rate: Option<Vec<f64>>,
    /// MA-LASSO beta values (scaled scheme), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// MA-LASSO base lambda values (additive scheme), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long)]
    pub n_estimators: Option<usize>,
    /// additive | scaled
    #[arg(long)]
    pub scheme: Option<PenaltyScheme>,
    /// all | sqrt | a fraction in (0, 1]
    #[arg(long)]
    pub max_features: Option<String>,
    /// alpha_star | alpha_zero | alpha_inf
    #[arg(long)]
    pub mode: Option<SelectionMode>,
    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Repeated train/test splits (sweep only).
    #[arg(long)]
    pub splits: Option<usize>,
    /// Bootstrap resamples for confidence intervals.
    #[arg(long)]
    pub bootstrap_b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (train) or CSV file (sweep).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! fill_missing {
    ($target:expr, $source:expr; $($field:ident),* $(,)?) => {
        $( if $target.$field.is_none() { $target.$field = $source.$field; } )*
    };
}

impl RunArgs {
    /// Fields unset on `self` are taken from `file`.
    pub fn overlay(mut self, file: RunArgs) -> Self {
        fill_missing!(self, file;
            data, synth, n, label, estimator, impute, standardize, alpha, max_depth,
            learning_rate, beta, lambda, n_estimators, scheme, max_features, mode,
            folds, test_fraction, splits, bootstrap_b, seed, out);
        self
    }

    pub fn from_toml(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Merges `file` (if any) under the flags and resolves every setting.
    pub fn resolve(self, config_file: Option<&Path>) -> Result<RunConfig> {
        let args = match config_file {
            Some(path) => self.overlay(Self::from_toml(path)?),
            None => self,
        };
        let source = match (args.data, args.synth) {
            (Some(path), None) => DataSource::Csv { path },
            (None, Some(spec)) => DataSource::Synth { spec, n: args.n.unwrap_or(2000) },
            (Some(_), Some(_)) => return Err(Error::Config("--data and --synth are mutually exclusive".into())),
            (None, None) => return Err(Error::Config("one of --data or --synth is required".into())),
        };
        let estimator = args.estimator.ok_or_else(|| Error::Config("--estimator is required".into()))?;
        let defaults = ParamGrid::default_for(estimator);
        let mut sweep = SweepConfig::new(estimator);
        sweep.grid = ParamGrid {
            alpha: args.alpha.unwrap_or(defaults.alpha),
            max_depth: args.max_depth.unwrap_or(defaults.max_depth),
            learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
            beta: args.beta.unwrap_or(defaults.beta),
            lambda: args.lambda.unwrap_or(defaults.lambda),
        };
        sweep.grid.validate()?;
        sweep.pipeline = Pipeline {
            standardize: args.standardize.unwrap_or(true),
            impute: args.impute.unwrap_or(ImputeStrategy::Zero),
        };
        let seed = args.seed.unwrap_or(0);
        sweep.seed = seed;
        sweep.base.seed = seed;
        if let Some(n) = args.n_estimators {
            sweep.base.n_estimators = n;
        }
        if let Some(scheme) = args.scheme {
            sweep.base.scheme = scheme;
        }
        if let Some(mf) = &args.max_features {
            sweep.base.max_features = parse_max_features(mf)?;
        }
        if let Some(mode) = args.mode {
            sweep.mode = mode;
        }
        if let Some(folds) = args.folds {
            sweep.folds = folds;
        }
        if let Some(f) = args.test_fraction {
            sweep.test_fraction = f;
        }
        if let Some(s) = args.splits {
            sweep.n_splits = s;
        }
        if let Some(b) = args.bootstrap_b {
            sweep.bootstrap_b = b;
        }
        if sweep.base.n_estimators == 0 || sweep.folds < 2 || sweep.n_splits == 0 {
            return Err(Error::Config("n_estimators and splits must be positive and folds at least 2".into()));
        }
        if !(sweep.test_fraction > 0.0 && sweep.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        Ok(RunConfig { source, label: args.label, out: args.out, sweep })
    }
}

/// All settings of a run after merging; recorded in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub label: Option<String>,
    pub out: Option<PathBuf>,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf },
    Synth { spec: String, n: usize },
}

impl RunConfig {
    /// Loads or generates the input data. Generated data is drawn with the run seed.
    pub fn load(&self) -> Result<Dataset> {
        match &self.source {
            DataSource::Csv { path } => {
                let label = self.label.as_deref().ok_or_else(|| Error::Config("--label is required with --data".into()))?;
                load_csv(path, &CsvOptions::new(label))
            }
            DataSource::Synth { spec, n } => generate(&load_process(spec)?, *n, self.sweep.seed),
        }
    }
}

/// `clinic` or a path to a process spec JSON file.
pub fn load_process(spec: &str) -> Result<OddcProcess> {
    if spec == "clinic" {
        return Ok(OddcProcess::clinic());
    }
    let text = std::fs::read_to_string(spec)?;
    let process: OddcProcess =
        serde_json::from_str(&text).map_err(|e| Error::Specification(format!("{spec}: {e}")))?;
    process.validate()?;
    Ok(process)
}

pub fn parse_max_features(s: &str) -> Result<MaxFeatures> {
    match s {
        "all" => Ok(MaxFeatures::All),
        "sqrt" => Ok(MaxFeatures::Sqrt),
        other => match other.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(MaxFeatures::Fraction(f)),
            _ => Err(Error::Config(format!("invalid max_features '{other}'"))),
        },
    }
}
