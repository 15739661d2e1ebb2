//! Proximal Newton solver for L1-penalized logistic regression.
//!
//! Each outer iteration builds the weighted least-squares approximation of the
//! mean log loss at the current point, minimizes it plus the L1 penalty by
//! cyclic coordinate descent with soft-thresholding, then backtracks along the
//! resulting direction until the true objective does not increase.

use super::{LassoFitParams, LinearModel, PenaltyScheme};
use crate::error::{contract, Result};
use crate::matrix::Matrix;
use crate::numeric::{log_loss, logit, sigmoid};

const MIN_WEIGHT: f64 = 1e-5;
const MAX_INNER_SWEEPS: usize = 2000;
const MAX_HALVINGS: usize = 50;
/// Float slack allowed when comparing objectives.
const OBJECTIVE_SLACK: f64 = 1e-15;

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn margins(columns: &[Vec<f64>], n: usize, theta: &[f64], intercept: f64) -> Vec<f64> {
    let mut eta = vec![intercept; n];
    for (col, &t) in columns.iter().zip(theta) {
        if t != 0.0 {
            for (e, v) in eta.iter_mut().zip(col) {
                *e += t * v;
            }
        }
    }
    eta
}

fn penalized(eta: &[f64], y: &[f64], theta: &[f64], lambda_j: &[f64]) -> f64 {
    let n = eta.len().max(1) as f64;
    let loss: f64 = eta.iter().zip(y).map(|(&z, &t)| log_loss(t, z)).sum::<f64>() / n;
    loss + theta.iter().zip(lambda_j).map(|(t, l)| l * t.abs()).sum::<f64>()
}

fn columns_of(x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.cols()).map(|j| x.column(j)).collect()
}

fn check_inputs(x: &Matrix, y: &[u8], lambda_j: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.rows() {
        return contract(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if y.iter().any(|&v| v > 1) {
        return contract("labels must be binary");
    }
    if lambda_j.len() != x.cols() {
        return contract("penalty vector length differs from column count");
    }
    if lambda_j.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return contract("penalties must be finite and non-negative");
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return contract("lasso needs imputed, finite inputs");
    }
    if x.rows() == 0 {
        return contract("cannot fit on zero rows");
    }
    Ok(y.iter().map(|&v| v as f64).collect())
}

/// Mean log loss plus `sum_j lambda_j |theta_j|`; the intercept is unpenalized.
pub fn objective(x: &Matrix, y: &[u8], theta: &[f64], intercept: f64, lambda_j: &[f64]) -> Result<f64> {
    let yf = check_inputs(x, y, lambda_j)?;
    let eta = margins(&columns_of(x), x.rows(), theta, intercept);
    Ok(penalized(&eta, &yf, theta, lambda_j))
}

/// Gradient of the mean log loss with respect to `(theta, intercept)`.
pub fn smooth_gradient(x: &Matrix, y: &[u8], theta: &[f64], intercept: f64) -> Result<(Vec<f64>, f64)> {
    let yf = check_inputs(x, y, &vec![0.0; x.cols()])?;
    let n = x.rows() as f64;
    let columns = columns_of(x);
    let eta = margins(&columns, x.rows(), theta, intercept);
    let resid: Vec<f64> = eta.iter().zip(&yf).map(|(&z, &t)| sigmoid(z) - t).collect();
    let grad = columns.iter().map(|col| col.iter().zip(&resid).map(|(v, r)| v * r).sum::<f64>() / n).collect();
    Ok((grad, resid.iter().sum::<f64>() / n))
}

/// Minimizes mean log loss plus `sum_j lambda_j |theta_j|` directly.
pub fn fit_lasso(x: &Matrix, y: &[u8], lambda_j: &[f64], params: &LassoFitParams) -> Result<LinearModel> {
    fit_lasso_with_history(x, y, lambda_j, params).map(|(m, _)| m)
}

/// As [`fit_lasso`], also returning the objective after every outer iteration
/// (the first entry is the starting point).
pub fn fit_lasso_with_history(
    x: &Matrix,
    y: &[u8],
    lambda_j: &[f64],
    params: &LassoFitParams,
) -> Result<(LinearModel, Vec<f64>)> {
    let yf = check_inputs(x, y, lambda_j)?;
    let (n, d) = (x.rows(), x.cols());
    let nf = n as f64;
    let columns = columns_of(x);

    let rate = yf.iter().sum::<f64>() / nf;
    let mut intercept = if rate > 0.0 && rate < 1.0 { logit(rate) } else { 0.0 };
    let mut theta = vec![0.0; d];
    let mut eta = margins(&columns, n, &theta, intercept);
    let mut obj = penalized(&eta, &yf, &theta, lambda_j);
    let mut history = vec![obj];
    let mut converged = false;
    let inner_tolerance = params.tolerance * 1e-2;

    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut a = vec![0.0; d];
    for _ in 0..params.max_iterations {
        // Quadratic model: (1/2n) sum_i w_i (z_i - eta_i)^2 with working response z.
        for i in 0..n {
            let p = sigmoid(eta[i]);
            w[i] = (p * (1.0 - p)).max(MIN_WEIGHT);
            r[i] = (yf[i] - p) / w[i];
        }
        let sum_w = w.iter().sum::<f64>() / nf;
        for (aj, col) in a.iter_mut().zip(&columns) {
            *aj = col.iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>() / nf;
        }

        let mut new_theta = theta.clone();
        let mut new_intercept = intercept;
        for _ in 0..MAX_INNER_SWEEPS {
            let db = r.iter().zip(&w).map(|(ri, wi)| ri * wi).sum::<f64>() / nf / sum_w;
            new_intercept += db;
            r.iter_mut().for_each(|ri| *ri -= db);
            let mut largest = db.abs();
            for j in 0..d {
                let old = new_theta[j];
                let updated = if a[j] > 0.0 {
                    let col = &columns[j];
                    let g = col.iter().zip(&r).zip(&w).map(|((v, ri), wi)| wi * v * ri).sum::<f64>() / nf
                        + a[j] * old;
                    soft_threshold(g, lambda_j[j]) / a[j]
                } else {
                    0.0
                };
                if updated != old {
                    let delta = updated - old;
                    for (ri, v) in r.iter_mut().zip(&columns[j]) {
                        *ri -= delta * v;
                    }
                    new_theta[j] = updated;
                    largest = largest.max(delta.abs());
                }
            }
            if largest < inner_tolerance {
                break;
            }
        }

        let step_size = new_theta
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold((new_intercept - intercept).abs(), f64::max);

        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let (cand_theta, cand_b) = if s == 1.0 {
                (new_theta.clone(), new_intercept)
            } else {
                let t: Vec<f64> = theta.iter().zip(&new_theta).map(|(o, nw)| o + s * (nw - o)).collect();
                (t, intercept + s * (new_intercept - intercept))
            };
            let cand_eta = margins(&columns, n, &cand_theta, cand_b);
            let cand_obj = penalized(&cand_eta, &yf, &cand_theta, lambda_j);
            if cand_obj <= obj + OBJECTIVE_SLACK * (1.0 + obj.abs()) {
                accepted = Some((cand_theta, cand_b, cand_eta, cand_obj));
                break;
            }
            s *= 0.5;
        }
        let Some((t, b, e, o)) = accepted else {
            // No descent at float resolution: the current point is optimal.
            converged = true;
            break;
        };
        theta = t;
        intercept = b;
        eta = e;
        obj = o.min(obj);
        history.push(obj);
        if s * step_size < params.tolerance {
            converged = true;
            break;
        }
    }

    let model = LinearModel {
        theta,
        intercept,
        penalty_weights: lambda_j.to_vec(),
        scheme: PenaltyScheme::Additive,
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        converged,
    };
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(&[
            vec![-2.0, 0.3],
            vec![-1.0, -0.4],
            vec![-0.5, 1.1],
            vec![0.5, -0.7],
            vec![1.0, 0.2],
            vec![2.0, -1.0],
            vec![0.1, 0.5],
            vec![-0.1, 0.0],
        ]);
        (x, vec![0, 0, 1, 0, 1, 1, 1, 0])
    }

    #[test]
    fn full_shrinkage_gives_base_rate() {
        let (x, y) = toy();
        let m = fit_lasso(&x, &y, &[1e6, 1e6], &LassoFitParams::default()).unwrap();
        assert_eq!(m.theta, vec![0.0, 0.0]);
        assert!((m.intercept - 0.0).abs() < 1e-10);
        let y2 = vec![0, 0, 1, 0, 0, 1, 0, 0];
        let m = fit_lasso(&x, &y2, &[1e6, 1e6], &LassoFitParams::default()).unwrap();
        assert!((m.intercept - (0.25f64 / 0.75).ln()).abs() < 1e-8);
    }

    #[test]
    fn sign_follows_correlation() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]]);
        let m = fit_lasso(&x, &[1, 1, 0, 0], &[0.05], &LassoFitParams::default()).unwrap();
        assert!(m.theta[0] < 0.0);
        assert!(m.converged);
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = toy();
        let (_, history) = fit_lasso_with_history(&x, &y, &[0.01, 0.05], &LassoFitParams::default()).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn rejects_bad_labels() {
        let (x, _) = toy();
        assert!(fit_lasso(&x, &[2; 8], &[0.1, 0.1], &LassoFitParams::default()).is_err());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }
}
