//! Regularized split search.

use serde::{Deserialize, Serialize};

use super::{SigmaWeights, Task};
use crate::matrix::{Mask, Matrix};

/// Gains at or below this are treated as no improvement.
pub(crate) const MIN_GAIN: f64 = 1e-12;
/// Scores closer than this are ties and resolve to the lower (feature, threshold).
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Gini impurity `sum_c p_c (1 - p_c)` of a two-class node.
///
/// Returns `None` if both counts are zero.
pub fn gini(negatives: f64, positives: f64) -> Option<f64> {
    let total = negatives + positives;
    if total <= 0.0 {
        return None;
    }
    let p0 = negatives / total;
    let p1 = positives / total;
    Some(p0 * (1.0 - p0) + p1 * (1.0 - p1))
}

/// Gini impurity from integer class counts.
pub fn gini_counts(counts: (usize, usize)) -> crate::Result<f64> {
    gini(counts.0 as f64, counts.1 as f64)
        .ok_or_else(|| crate::Error::Contract("gini of an empty node".into()))
}

/// Everything the split search reads: imputed values, the original mask,
/// targets and optional per-row weights and sigma multipliers.
#[derive(Debug, Clone, Copy)]
pub struct SplitData<'a> {
    pub x: &'a Matrix,
    pub mask: &'a Mask,
    pub targets: &'a [f64],
    pub task: Task,
    pub sample_weight: Option<&'a [f64]>,
    pub sigma: Option<&'a SigmaWeights>,
}

impl<'a> SplitData<'a> {
    pub fn new(x: &'a Matrix, mask: &'a Mask, targets: &'a [f64], task: Task) -> Self {
        Self { x, mask, targets, task, sample_weight: None, sigma: None }
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.sample_weight.map_or(1.0, |w| w[i])
    }

    #[inline]
    fn sigma(&self, i: usize, j: usize) -> f64 {
        match self.sigma {
            Some(s) if !s.get(i, j) => 0.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child impurity plus `alpha` times the penalty.
    pub score: f64,
    /// Unscaled missingness penalty of `feature` at this node.
    pub penalty: f64,
}

/// Weighted sufficient statistics: total weight, weighted target sum and
/// weighted squared target sum (the latter only used for regression).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Stats {
    pub weight: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Stats {
    #[inline]
    pub fn add(&mut self, w: f64, y: f64) {
        self.weight += w;
        self.sum += w * y;
        self.sum_sq += w * y * y;
    }

    #[inline]
    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            weight: self.weight - other.weight,
            sum: self.sum - other.sum,
            sum_sq: self.sum_sq - other.sum_sq,
        }
    }

    pub fn impurity(&self, task: Task) -> f64 {
        match task {
            Task::Classify => gini(self.weight - self.sum, self.sum).unwrap_or(0.0),
            Task::Regress => {
                if self.weight <= 0.0 {
                    return 0.0;
                }
                let mean = self.sum / self.weight;
                (self.sum_sq / self.weight - mean * mean).max(0.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        if self.weight > 0.0 {
            self.sum / self.weight
        } else {
            0.0
        }
    }
}

pub(crate) fn node_stats(samples: &[usize], data: &SplitData) -> Stats {
    let mut stats = Stats::default();
    for &i in samples {
        stats.add(data.weight(i), data.targets[i]);
    }
    stats
}

/// Missingness penalty of splitting the node on `feature`:
/// `sum_i w_i sigma_ij m_ij / sum_i w_i` over the node's samples. With unit
/// weights this is the sigma-weighted fraction of node rows missing `feature`.
/// Independent of the threshold.
pub fn split_penalty(samples: &[usize], feature: usize, data: &SplitData) -> f64 {
    let mut total = 0.0;
    let mut missing = 0.0;
    for &i in samples {
        let w = data.weight(i);
        total += w;
        if data.mask.get(i, feature) {
            missing += w * data.sigma(i, feature);
        }
    }
    if total > 0.0 {
        missing / total
    } else {
        0.0
    }
}

/// Midpoint between two consecutive distinct values, kept strictly below `hi`.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Finds the split minimizing weighted child impurity plus `alpha` times the
/// missingness penalty over `features`. Returns `None` when no candidate
/// improves on the parent impurity by more than zero and by at least
/// `min_impurity_decrease`.
pub(crate) fn best_split_among(
    samples: &[usize],
    data: &SplitData,
    alpha: f64,
    min_impurity_decrease: f64,
    features: &[usize],
    scratch: &mut Vec<(f64, usize)>,
) -> Option<Split> {
    let parent = node_stats(samples, data);
    let parent_impurity = parent.impurity(data.task);
    let mut best: Option<Split> = None;
    for &j in features {
        let penalty = split_penalty(samples, j, data);
        let regularization = alpha * penalty;
        if let Some(b) = &best {
            // Child impurity is non-negative, so this feature cannot win.
            if regularization > b.score + TIE_TOLERANCE {
                continue;
            }
        }
        scratch.clear();
        scratch.extend(samples.iter().map(|&i| (data.x.get(i, j), i)));
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = Stats::default();
        for k in 0..scratch.len() - 1 {
            let (v, i) = scratch[k];
            left.add(data.weight(i), data.targets[i]);
            let next = scratch[k + 1].0;
            if next <= v {
                continue;
            }
            let right = parent.minus(&left);
            let score = (left.weight / parent.weight) * left.impurity(data.task)
                + (right.weight / parent.weight) * right.impurity(data.task)
                + regularization;
            let better = match &best {
                None => true,
                Some(b) => score < b.score - TIE_TOLERANCE,
            };
            if better {
                best = Some(Split { feature: j, threshold: midpoint(v, next), score, penalty });
            }
        }
    }
    best.filter(|b| {
        let gain = parent_impurity - b.score;
        gain > MIN_GAIN && gain >= min_impurity_decrease
    })
}
