use std::cell::RefCell;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::numeric::quantile;
use crate::rng;

/// Area under the ROC curve as the Mann-Whitney statistic, counting tied
/// positive-negative pairs as one half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return contract(format!("{} scores for {} labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return contract("NaN score");
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut negatives_below, mut wins) = (0.0, 0.0);
    let (mut n_pos, mut n_neg) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let score = scores[order[k]];
        let (mut pos, mut neg) = (0.0, 0.0);
        while k < order.len() && scores[order[k]] == score {
            if labels[order[k]] == 1 {
                pos += 1.0;
            } else {
                neg += 1.0;
            }
            k += 1;
        }
        wins += pos * (negatives_below + 0.5 * neg);
        negatives_below += neg;
        n_pos += pos;
        n_neg += neg;
    }
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes".into()));
    }
    Ok(wins / (n_pos * n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    /// Number of resamples.
    pub b: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { b: 1000, level: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Resamples on which the statistic was undefined.
    pub skipped: usize,
}

/// Percentile bootstrap interval of `statistic` over row resamples of size
/// `n`. The statistic returns `None` when undefined on a resample; such
/// resamples are skipped, and more than half skipped is an error.
pub fn bootstrap_ci<F>(n: usize, statistic: F, options: &BootstrapOptions) -> Result<Interval>
where
    F: Fn(&[usize]) -> Option<f64>,
{
    if options.b < 100 {
        return Err(Error::Config(format!("need at least 100 bootstrap resamples, got {}", options.b)));
    }
    if !(options.level > 0.0 && options.level < 1.0) {
        return Err(Error::Config(format!("confidence level {} outside (0, 1)", options.level)));
    }
    if n == 0 {
        return contract("bootstrap over zero rows");
    }
    let mut rng = rng::seeded(options.seed);
    let mut values = Vec::with_capacity(options.b);
    let mut indices = vec![0; n];
    let mut skipped = 0;
    for _ in 0..options.b {
        indices.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
        match statistic(&indices) {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    if 2 * skipped > options.b {
        return Err(Error::UnstableMetric { skipped, total: options.b });
    }
    values.sort_unstable_by(f64::total_cmp);
    let tail = (1.0 - options.level) / 2.0;
    Ok(Interval { lo: quantile(&values, tail), hi: quantile(&values, 1.0 - tail), skipped })
}

/// Bootstrap interval for AUROC; single-class resamples are skipped.
pub fn auroc_ci(scores: &[f64], labels: &[u8], options: &BootstrapOptions) -> Result<Interval> {
    let buffers = RefCell::new((Vec::with_capacity(scores.len()), Vec::with_capacity(labels.len())));
    bootstrap_ci(
        scores.len(),
        |idx| {
            let (s, l) = &mut *buffers.borrow_mut();
            s.clear();
            l.clear();
            s.extend(idx.iter().map(|&i| scores[i]));
            l.extend(idx.iter().map(|&i| labels[i]));
            auroc(s, l).ok()
        },
        options,
    )
}

/// Bootstrap interval for the mean of per-row 0/1 reliance indicators.
pub fn mean_ci(values: &[u8], options: &BootstrapOptions) -> Result<Interval> {
    let n = values.len();
    bootstrap_ci(n, |idx| Some(idx.iter().map(|&i| values[i] as f64).sum::<f64>() / n as f64), options)
}

/// Test-set AUROC and reliance with bootstrap intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub auroc: f64,
    pub auroc_ci: (f64, f64),
    pub rho_hat: f64,
    pub rho_ci: (f64, f64),
    pub n_test: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub skipped_resamples: usize,
}

/// Builds a report from test scores, labels and per-row reliance. Intervals
/// are widened if needed so they contain the point estimates.
pub fn evaluate(scores: &[f64], labels: &[u8], reliance: &[u8], options: &BootstrapOptions) -> Result<EvaluationReport> {
    if reliance.len() != labels.len() {
        return contract("reliance and label lengths differ");
    }
    let point = auroc(scores, labels)?;
    let rho = reliance.iter().map(|&r| r as f64).sum::<f64>() / reliance.len() as f64;
    let a = auroc_ci(scores, labels, options)?;
    let r = mean_ci(reliance, options)?;
    Ok(EvaluationReport {
        auroc: point,
        auroc_ci: (a.lo.min(point), a.hi.max(point)),
        rho_hat: rho,
        rho_ci: (r.lo.min(rho), r.hi.max(rho)),
        n_test: labels.len(),
        bootstrap_b: options.b,
        seed: options.seed,
        skipped_resamples: a.skipped,
    })
}
