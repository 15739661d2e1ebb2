//! Cross-validation harness, train-and-select and sweep experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auroc, evaluate, BootstrapOptions, EvaluationReport};
use super::select::{select_model, select_with_mode, Candidate, SelectionMode, SelectionResult};
use crate::dataset::{kfold, train_test_indices, Dataset, ImputeStrategy, ImputedDataset, Preprocessor};
use crate::error::Result;
use crate::model::{Estimator, HyperParams, Model, ParamGrid};
use crate::reliance::RelianceReport;

/// Encoding and imputation applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub standardize: bool,
    pub impute: ImputeStrategy,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self { standardize: true, impute: ImputeStrategy::Zero }
    }
}

impl Pipeline {
    pub fn prepare(&self, train: &Dataset, others: &[&Dataset]) -> Result<(Preprocessor, ImputedDataset, Vec<ImputedDataset>)> {
        let pre = Preprocessor::fit(train, self.standardize, self.impute);
        let fitted = pre.transform(train)?;
        let rest = others.iter().map(|d| pre.transform(d)).collect::<Result<Vec<_>>>()?;
        Ok((pre, fitted, rest))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub estimator: Estimator,
    pub grid: ParamGrid,
    /// Values for settings outside the grid (seed, ensemble size, scheme).
    pub base: HyperParams,
    pub pipeline: Pipeline,
    pub n_splits: usize,
    pub test_fraction: f64,
    pub folds: usize,
    /// Selection rule for training runs; sweeps always use the default rule
    /// within each swept point.
    pub mode: SelectionMode,
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(estimator: Estimator) -> Self {
        Self {
            estimator,
            grid: ParamGrid::default_for(estimator),
            base: HyperParams::defaults(estimator),
            pipeline: Pipeline::default(),
            n_splits: 5,
            test_fraction: 0.2,
            folds: 3,
            mode: SelectionMode::AlphaStar,
            bootstrap_b: 1000,
            seed: 0,
        }
    }

    fn split_seed(&self, s: usize) -> u64 {
        self.seed.wrapping_add(s as u64)
    }
}

/// Cross-validated AUROC and reliance of every point on `train`. The
/// preprocessing is refit inside each fold.
pub fn cross_validate(
    train: &Dataset,
    points: &[HyperParams],
    pipeline: &Pipeline,
    folds: usize,
    seed: u64,
) -> Result<Vec<Candidate<HyperParams>>> {
    let splits = kfold(train.labels(), folds, seed)?;
    let prepared = splits
        .par_iter()
        .map(|fold| {
            let (_, tr, rest) = pipeline.prepare(&train.select_rows(&fold.train), &[&train.select_rows(&fold.validation)])?;
            Ok((tr, rest.into_iter().next().expect("one validation set")))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..prepared.len()).map(move |f| (p, f))).collect();
    let metrics = jobs
        .par_iter()
        .map(|&(p, f)| {
            let (tr, va) = &prepared[f];
            let model = Model::fit(tr, &points[p])?;
            let scores = model.predict_rows(va)?;
            Ok((auroc(&scores, &va.labels)?, model.reliance_report(va)?.rho_hat))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(p, hp)| {
            let m = &metrics[p * prepared.len()..(p + 1) * prepared.len()];
            Candidate::new(*hp, hp.alpha, m.iter().map(|x| x.0).collect(), m.iter().map(|x| x.1).collect())
        })
        .collect())
}

/// Result of a single train-select-evaluate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub preprocessor: Preprocessor,
    pub model: Model,
    pub selection: SelectionResult<HyperParams>,
    pub report: EvaluationReport,
    pub reliance: RelianceReport,
    pub split_seed: u64,
}

/// Splits `data`, selects hyperparameters by cross-validation on the training
/// part with `config.mode`, refits on the whole training part and evaluates
/// on the test part. `alpha_zero` replaces the alpha axis by `{0}`.
pub fn train_select(data: &Dataset, config: &SweepConfig) -> Result<TrainOutcome> {
    config.grid.validate()?;
    let mut grid = config.grid.clone();
    if config.mode == SelectionMode::AlphaZero {
        grid.alpha = vec![0.0];
    }
    let split_seed = config.split_seed(0);
    let idx = train_test_indices(data.labels(), config.test_fraction, split_seed)?;
    let (train, test) = (data.select_rows(&idx.train), data.select_rows(&idx.test));
    let points = grid.points(&config.base);
    let candidates = cross_validate(&train, &points, &config.pipeline, config.folds, split_seed)?;
    let selection = select_with_mode(candidates, config.mode)?;
    let (preprocessor, tr, rest) = config.pipeline.prepare(&train, &[&test])?;
    let te = &rest[0];
    let model = Model::fit(&tr, &selection.chosen().params)?;
    let scores = model.predict_rows(te)?;
    let reliance = model.reliance_report(te)?;
    let options = BootstrapOptions { b: config.bootstrap_b, level: 0.95, seed: split_seed };
    let report = evaluate(&scores, &te.labels, &reliance.per_sample, &options)?;
    Ok(TrainOutcome { preprocessor, model, selection, report, reliance, split_seed })
}

/// One row of sweep output: a swept (alpha, max_depth) point on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub split_seed: u64,
    pub estimator: Estimator,
    pub alpha: f64,
    pub max_depth: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub cv_auroc: f64,
    pub cv_rho: f64,
    pub auroc: f64,
    pub auroc_lo: f64,
    pub auroc_hi: f64,
    pub rho_hat: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
}

/// For each repeated split and each (alpha, max_depth) grid pair, selects the
/// remaining settings by cross-validation, refits and evaluates on the test
/// part. Rows are ordered by split, then alpha, then depth.
pub fn sweep(data: &Dataset, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.grid.validate()?;
    let est = config.estimator;
    let mut rows = Vec::new();
    for s in 0..config.n_splits {
        let split_seed = config.split_seed(s);
        let idx = train_test_indices(data.labels(), config.test_fraction, split_seed)?;
        let (train, test) = (data.select_rows(&idx.train), data.select_rows(&idx.test));
        let points = config.grid.points(&config.base);
        let candidates = cross_validate(&train, &points, &config.pipeline, config.folds, split_seed)?;
        let (_, tr, rest) = config.pipeline.prepare(&train, &[&test])?;
        let te = &rest[0];

        let mut groups: Vec<Vec<Candidate<HyperParams>>> = Vec::new();
        for c in candidates {
            match groups.last_mut() {
                Some(g) if g[0].params.alpha == c.params.alpha && g[0].params.max_depth == c.params.max_depth => g.push(c),
                _ => groups.push(vec![c]),
            }
        }
        let split_rows = groups
            .into_par_iter()
            .map(|group| {
                let sel = select_model(group)?;
                let chosen = sel.chosen();
                let hp = chosen.params;
                let model = Model::fit(&tr, &hp)?;
                let scores = model.predict_rows(te)?;
                let reliance = model.reliance_report(te)?;
                let options = BootstrapOptions { b: config.bootstrap_b, level: 0.95, seed: split_seed };
                let r = evaluate(&scores, &te.labels, &reliance.per_sample, &options)?;
                Ok(SweepRow {
                    split_seed,
                    estimator: est,
                    alpha: hp.alpha,
                    max_depth: est.is_tree_based().then_some(hp.max_depth),
                    learning_rate: (est == Estimator::MaGbt).then_some(hp.learning_rate),
                    beta: (est == Estimator::MaLasso).then_some(hp.beta),
                    lambda: (est == Estimator::MaLasso).then_some(hp.lambda),
                    cv_auroc: chosen.cv_auroc,
                    cv_rho: chosen.cv_rho,
                    auroc: r.auroc,
                    auroc_lo: r.auroc_ci.0,
                    auroc_hi: r.auroc_ci.1,
                    rho_hat: r.rho_hat,
                    rho_lo: r.rho_ci.0,
                    rho_hi: r.rho_ci.1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(split_rows);
    }
    Ok(rows)
}

/// Writes sweep rows as CSV with a header.
pub fn sweep_csv<W: std::io::Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
