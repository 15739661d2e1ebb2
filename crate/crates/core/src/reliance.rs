//! Missingness reliance: whether a prediction depends on a missing feature.

use serde::{Deserialize, Serialize};

use crate::dataset::ImputedDataset;
use crate::ensemble::Ensemble;
use crate::error::{contract, Result};
use crate::linear::LinearModel;
use crate::tree::DecisionTree;

/// Coefficients with magnitude at or below this count as zero.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-12;

/// Models whose per-row feature usage `a_h(x, j)` can be traced.
pub trait Reliance {
    fn n_features(&self) -> usize;

    /// Sets `used[j]` for every feature the prediction at `x` depends on.
    /// Existing `true` entries are kept.
    fn mark_used(&self, x: &[f64], used: &mut [bool]);

    /// `1` if the prediction at `x` uses some feature missing in `m`.
    fn reliance(&self, x: &[f64], m: &[bool]) -> u8 {
        let mut used = vec![false; self.n_features()];
        self.mark_used(x, &mut used);
        used.iter().zip(m).any(|(&u, &missing)| u && missing) as u8
    }
}

impl Reliance for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn mark_used(&self, x: &[f64], used: &mut [bool]) {
        self.for_each_split_on_path(x, |feature, _| used[feature] = true);
    }

    fn reliance(&self, x: &[f64], m: &[bool]) -> u8 {
        let mut hit = false;
        self.for_each_split_on_path(x, |feature, _| hit |= m[feature]);
        hit as u8
    }
}

impl Reliance for LinearModel {
    fn n_features(&self) -> usize {
        self.theta.len()
    }

    fn mark_used(&self, _x: &[f64], used: &mut [bool]) {
        for (u, t) in used.iter_mut().zip(&self.theta) {
            *u |= t.abs() > COEFFICIENT_TOLERANCE;
        }
    }
}

impl Reliance for Ensemble {
    fn n_features(&self) -> usize {
        self.trees.first().map_or(0, |t| t.n_features)
    }

    fn mark_used(&self, x: &[f64], used: &mut [bool]) {
        for tree in &self.trees {
            tree.mark_used(x, used);
        }
    }

    fn reliance(&self, x: &[f64], m: &[bool]) -> u8 {
        self.trees.iter().map(|t| t.reliance(x, m)).max().unwrap_or(0)
    }
}

pub fn reliance_linear(model: &LinearModel, x: &[f64], m: &[bool]) -> u8 {
    model.reliance(x, m)
}

pub fn reliance_tree(tree: &DecisionTree, x: &[f64], m: &[bool]) -> u8 {
    tree.reliance(x, m)
}

pub fn reliance_ensemble(ensemble: &Ensemble, x: &[f64], m: &[bool]) -> u8 {
    ensemble.reliance(x, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelianceReport {
    #[serde(skip)]
    pub per_sample: Vec<u8>,
    pub rho_hat: f64,
    /// Fraction of rows whose prediction uses each feature.
    pub per_feature_usage: Vec<f64>,
    pub n: usize,
}

/// Per-row reliance and its mean over `data`.
pub fn empirical_reliance<M: Reliance + ?Sized>(model: &M, data: &ImputedDataset) -> Result<RelianceReport> {
    let d = model.n_features();
    if data.n_features() != d || data.mask.cols() != d {
        return contract(format!("model expects {d} features, data has {}", data.n_features()));
    }
    let n = data.n_rows();
    let mut per_sample = Vec::with_capacity(n);
    let mut counts = vec![0usize; d];
    let mut used = vec![false; d];
    for i in 0..n {
        used.iter_mut().for_each(|u| *u = false);
        model.mark_used(data.x.row(i), &mut used);
        let m = data.mask.row(i);
        per_sample.push(used.iter().zip(m).any(|(&u, &missing)| u && missing) as u8);
        for (c, &u) in counts.iter_mut().zip(&used) {
            *c += u as usize;
        }
    }
    let denom = n.max(1) as f64;
    Ok(RelianceReport {
        rho_hat: per_sample.iter().map(|&r| r as f64).sum::<f64>() / denom,
        per_feature_usage: counts.iter().map(|&c| c as f64 / denom).collect(),
        per_sample,
        n,
    })
}

/// Lower bound `max_j usage_j * p_j` on reliance when features are missing
/// completely at random with rates `p`.
pub fn mcar_bound(report: &RelianceReport, p: &[f64]) -> f64 {
    report.per_feature_usage.iter().zip(p).map(|(u, p)| u * p).fold(0.0, f64::max)
}
