//! Missingness-avoiding lasso: L1-penalized logistic regression whose
//! per-feature penalty grows with the feature's missingness rate.

mod solver;

pub use solver::{fit_lasso, fit_lasso_with_history, objective, smooth_gradient};

use serde::{Deserialize, Serialize};

use crate::dataset::ImputedDataset;
use crate::error::{contract, Error, Result};
use crate::matrix::{Mask, Matrix};
use crate::numeric::sigmoid;

/// How per-feature penalties are derived from the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyScheme {
    /// `lambda_j = lambda + alpha * mean_i m_ij`.
    Additive,
    /// `lambda_j = alpha * (sum_i m_ij + beta) / n`.
    Scaled,
}

impl std::str::FromStr for PenaltyScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Self::Additive),
            "scaled" => Ok(Self::Scaled),
            other => Err(Error::Config(format!("unknown penalty scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoFitParams {
    /// Base penalty (additive only).
    pub lambda: f64,
    pub alpha: f64,
    /// Count offset (scaled only).
    pub beta: f64,
    pub scheme: PenaltyScheme,
    pub max_iterations: usize,
    /// Convergence threshold on the largest coefficient change.
    pub tolerance: f64,
}

impl Default for LassoFitParams {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            alpha: 0.0,
            beta: 1.0,
            scheme: PenaltyScheme::Additive,
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

impl LassoFitParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.scheme == PenaltyScheme::Additive && !(self.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return bad("tolerance and max_iterations must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub penalty_weights: Vec<f64>,
    pub scheme: PenaltyScheme,
    pub feature_names: Vec<String>,
    pub converged: bool,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.theta.len()
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.theta.len() {
            return contract(format!("row has {} features, model expects {}", x.len(), self.theta.len()));
        }
        if x.iter().any(|v| v.is_nan()) {
            return contract("NA in input row; predict on imputed rows");
        }
        Ok(self.intercept + self.theta.iter().zip(x).map(|(t, v)| t * v).sum::<f64>())
    }

    /// Positive-class probability.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.margin(x)?))
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.theta.len()).filter(|&j| self.theta[j] != 0.0).collect()
    }
}

/// Per-feature penalties for `mask` under `params.scheme`.
pub fn penalty_weights(mask: &Mask, params: &LassoFitParams) -> Vec<f64> {
    let n = mask.rows().max(1) as f64;
    (0..mask.cols())
        .map(|j| {
            let missing = mask.column_missing_count(j) as f64;
            match params.scheme {
                PenaltyScheme::Additive => params.lambda + params.alpha * missing / n,
                PenaltyScheme::Scaled => (missing + params.beta) / n * params.alpha,
            }
        })
        .collect()
}

/// Scales column `j` of `x` by `lambda_prime / lambda_j[j]`.
///
/// Fails if some `lambda_j` is not positive; callers then solve the weighted
/// problem directly.
pub fn rescale(x: &Matrix, lambda_j: &[f64], lambda_prime: f64) -> Result<Matrix> {
    if lambda_j.len() != x.cols() {
        return contract("penalty vector length differs from column count");
    }
    if let Some(j) = lambda_j.iter().position(|&l| !(l > 0.0)) {
        return contract(format!("penalty of feature {j} is not positive; cannot rescale"));
    }
    let factors: Vec<f64> = lambda_j.iter().map(|l| lambda_prime / l).collect();
    let mut out = x.clone();
    for i in 0..x.rows() {
        for (j, f) in factors.iter().enumerate() {
            out.set(i, j, x.get(i, j) * f);
        }
    }
    Ok(out)
}

/// Fits MA-LASSO on imputed data. Uses the rescaling reduction to a uniform
/// penalty when every `lambda_j > 0` and the weighted solve otherwise.
pub fn fit_ma_lasso(data: &ImputedDataset, params: &LassoFitParams) -> Result<LinearModel> {
    params.validate()?;
    let lambda_j = penalty_weights(&data.mask, params);
    let d = lambda_j.len();
    let mut model = if d > 0 && lambda_j.iter().all(|&l| l > 0.0) {
        let lambda_prime = lambda_j.iter().sum::<f64>() / d as f64;
        let scaled = rescale(&data.x, &lambda_j, lambda_prime)?;
        let mut m = fit_lasso(&scaled, &data.labels, &vec![lambda_prime; d], params)?;
        for (t, l) in m.theta.iter_mut().zip(&lambda_j) {
            *t *= lambda_prime / l;
        }
        m
    } else {
        fit_lasso(&data.x, &data.labels, &lambda_j, params)?
    };
    model.penalty_weights = lambda_j;
    model.scheme = params.scheme;
    model.feature_names = data.feature_names.clone();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(scheme: PenaltyScheme, lambda: f64, alpha: f64, beta: f64) -> LassoFitParams {
        LassoFitParams { lambda, alpha, beta, scheme, ..LassoFitParams::default() }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn additive_weights() {
        let mask = Mask::from_rows(&[vec![false, true], vec![false, false]]);
        assert!(close(&penalty_weights(&mask, &params(PenaltyScheme::Additive, 0.1, 1.0, 0.0)), &[0.1, 0.6]));
        assert!(close(&penalty_weights(&mask, &params(PenaltyScheme::Additive, 0.1, 0.0, 0.0)), &[0.1, 0.1]));
    }

    #[test]
    fn scaled_weights() {
        let mut mask = Mask::new(10, 2);
        for i in 0..5 {
            mask.set(i, 1, true);
        }
        assert!(close(&penalty_weights(&mask, &params(PenaltyScheme::Scaled, 0.0, 2.0, 1.0)), &[0.2, 1.2]));
    }

    #[test]
    fn rescale_cases() {
        let x = Matrix::from_rows(&[vec![4.0, 1.0], vec![6.0, 2.0]]);
        assert_eq!(rescale(&x, &[0.5, 0.5], 0.5).unwrap(), x);
        let one = Matrix::from_rows(&[vec![4.0], vec![6.0]]);
        assert_eq!(rescale(&one, &[2.0], 1.0).unwrap(), Matrix::from_rows(&[vec![2.0], vec![3.0]]));
        assert!(rescale(&one, &[0.0], 1.0).is_err());
    }

    #[test]
    fn scheme_json_names() {
        assert_eq!(serde_json::to_string(&PenaltyScheme::Scaled).unwrap(), "\"scaled\"");
        assert_eq!("additive".parse::<PenaltyScheme>().unwrap(), PenaltyScheme::Additive);
    }

    #[test]
    fn complete_feature_beats_missing_one() {
        // Feature 1 copies feature 0 but is 90% missing (imputed to 0).
        let n = 200;
        let mut rows = Vec::new();
        let mut mask = Mask::new(n, 2);
        let mut labels = Vec::new();
        for i in 0..n {
            let v = if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + (i % 7) as f64 / 7.0);
            let y = (v > 0.0) as u8 ^ (i % 10 == 3) as u8;
            let missing = i % 10 != 0;
            mask.set(i, 1, missing);
            rows.push(vec![v, if missing { 0.0 } else { v }]);
            labels.push(y);
        }
        let data = ImputedDataset::with_mask(Matrix::from_rows(&rows), mask, labels);
        let model = fit_ma_lasso(&data, &params(PenaltyScheme::Additive, 0.01, 1.0, 0.0)).unwrap();
        assert!(model.theta[0] > 0.0);
        assert_eq!(model.theta[1], 0.0);
        assert!(model.converged);
    }

    #[test]
    fn validates_params() {
        let data = ImputedDataset::complete(Matrix::zeros(2, 1), vec![0, 1]);
        assert!(fit_ma_lasso(&data, &params(PenaltyScheme::Additive, 0.0, 1.0, 0.0)).is_err());
        assert!(fit_ma_lasso(&data, &params(PenaltyScheme::Additive, 0.1, -1.0, 0.0)).is_err());
    }
}
