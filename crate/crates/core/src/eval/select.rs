//! Model selection under the accuracy-reliance trade-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidates must reach this fraction of the best cross-validated AUROC.
pub const AUROC_FRACTION: f64 = 0.95;
/// Reliance at or below this counts as reliance-free for [`SelectionMode::AlphaInf`].
pub const NEAR_ZERO_RHO: f64 = 0.005;
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Lowest reliance among candidates within 95% of the best AUROC.
    AlphaStar,
    /// The same rule restricted to `alpha = 0`.
    AlphaZero,
    /// Best AUROC among candidates with near-zero reliance.
    AlphaInf,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha_star" => Ok(Self::AlphaStar),
            "alpha_zero" => Ok(Self::AlphaZero),
            "alpha_inf" => Ok(Self::AlphaInf),
            other => Err(Error::Config(format!("unknown selection mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate<P> {
    pub params: P,
    pub alpha: f64,
    pub fold_aurocs: Vec<f64>,
    pub fold_rhos: Vec<f64>,
    pub cv_auroc: f64,
    pub cv_rho: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl<P> Candidate<P> {
    /// Cross-validated metrics are unweighted fold means.
    pub fn new(params: P, alpha: f64, fold_aurocs: Vec<f64>, fold_rhos: Vec<f64>) -> Self {
        Self { params, alpha, cv_auroc: mean(&fold_aurocs), cv_rho: mean(&fold_rhos), fold_aurocs, fold_rhos }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<P> {
    pub mode: SelectionMode,
    pub candidates: Vec<Candidate<P>>,
    pub chosen: usize,
    pub max_auroc: f64,
    pub threshold: f64,
}

impl<P> SelectionResult<P> {
    pub fn chosen(&self) -> &Candidate<P> {
        &self.candidates[self.chosen]
    }
}

/// Index of the lowest `cv_rho` among `pool` at or above `threshold`; ties go
/// to the lower alpha, then to the earlier candidate.
fn lowest_rho<P>(candidates: &[Candidate<P>], pool: &[usize], threshold: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &i in pool {
        let c = &candidates[i];
        if !(c.cv_auroc >= threshold) {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cb = &candidates[b];
                let better = c.cv_rho < cb.cv_rho - TIE || ((c.cv_rho - cb.cv_rho).abs() <= TIE && c.alpha < cb.alpha);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

fn max_auroc<P>(candidates: &[Candidate<P>], pool: &[usize]) -> f64 {
    pool.iter().map(|&i| candidates[i].cv_auroc).fold(f64::NEG_INFINITY, f64::max)
}

/// Applies the default rule: lowest reliance among candidates reaching 95% of
/// the maximum cross-validated AUROC.
pub fn select_model<P>(candidates: Vec<Candidate<P>>) -> Result<SelectionResult<P>> {
    select_with_mode(candidates, SelectionMode::AlphaStar)
}

pub fn select_with_mode<P>(candidates: Vec<Candidate<P>>, mode: SelectionMode) -> Result<SelectionResult<P>> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to select from".into()));
    }
    if candidates.iter().any(|c| c.cv_auroc.is_nan() || c.cv_rho.is_nan()) {
        return Err(Error::Contract("candidate metrics must be defined".into()));
    }
    let all: Vec<usize> = (0..candidates.len()).collect();
    let (chosen, max, threshold) = match mode {
        SelectionMode::AlphaStar => {
            let max = max_auroc(&candidates, &all);
            let threshold = AUROC_FRACTION * max;
            (lowest_rho(&candidates, &all, threshold), max, threshold)
        }
        SelectionMode::AlphaZero => {
            let pool: Vec<usize> = all.iter().copied().filter(|&i| candidates[i].alpha == 0.0).collect();
            if pool.is_empty() {
                return Err(Error::Config("alpha_zero selection needs candidates with alpha = 0".into()));
            }
            let max = max_auroc(&candidates, &pool);
            let threshold = AUROC_FRACTION * max;
            (lowest_rho(&candidates, &pool, threshold), max, threshold)
        }
        SelectionMode::AlphaInf => {
            let mut pool: Vec<usize> = all.iter().copied().filter(|&i| candidates[i].cv_rho <= NEAR_ZERO_RHO).collect();
            if pool.is_empty() {
                let top = candidates.iter().map(|c| c.alpha).fold(f64::NEG_INFINITY, f64::max);
                pool = all.iter().copied().filter(|&i| candidates[i].alpha == top).collect();
            }
            let max = max_auroc(&candidates, &pool);
            // Best AUROC; ties to the larger alpha, then the earlier candidate.
            let mut best = pool[0];
            for &i in &pool[1..] {
                let (c, b) = (&candidates[i], &candidates[best]);
                if c.cv_auroc > b.cv_auroc + TIE || ((c.cv_auroc - b.cv_auroc).abs() <= TIE && c.alpha > b.alpha) {
                    best = i;
                }
            }
            (Some(best), max, max)
        }
    };
    let chosen = chosen.expect("the maximum itself always qualifies");
    Ok(SelectionResult { mode, candidates, chosen, max_auroc: max, threshold })
}
