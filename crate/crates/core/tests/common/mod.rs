//! Independent reference implementations used as test oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use malearn::matrix::{Mask, Matrix};
use malearn::tree::{DecisionTree, NodeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gini_of(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let pos = ys.iter().filter(|&&y| y == 1.0).count() as f64;
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

/// Exhaustive search over every (feature, midpoint) pair, recomputing child
/// impurities from scratch. Returns `(feature, threshold, score)`.
pub fn brute_force_split(
    samples: &[usize],
    x: &Matrix,
    mask: &Mask,
    y: &[f64],
    alpha: f64,
) -> Option<(usize, f64, f64)> {
    let parent: Vec<f64> = samples.iter().map(|&i| y[i]).collect();
    let parent_gini = gini_of(&parent);
    let mut all = Vec::new();
    for j in 0..x.cols() {
        let mut values: Vec<f64> = samples.iter().map(|&i| x.get(i, j)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        let missing = samples.iter().filter(|&&i| mask.get(i, j)).count() as f64;
        let penalty = alpha * missing / samples.len() as f64;
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<f64> = samples.iter().filter(|&&i| x.get(i, j) <= t).map(|&i| y[i]).collect();
            let right: Vec<f64> = samples.iter().filter(|&&i| x.get(i, j) > t).map(|&i| y[i]).collect();
            let n = samples.len() as f64;
            let score = left.len() as f64 / n * gini_of(&left) + right.len() as f64 / n * gini_of(&right) + penalty;
            all.push((j, t, score));
        }
    }
    let min = all.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let best = all.into_iter().find(|c| c.2 <= min + 1e-12)?;
    (parent_gini - best.2 > 1e-12).then_some(best)
}

/// Plain greedy CART (Gini, midpoints, lexicographic ties) without any
/// missingness handling.
#[derive(Debug, Clone, PartialEq)]
pub enum RefTree {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<RefTree>, right: Box<RefTree> },
}

pub fn reference_cart(samples: &[usize], x: &Matrix, y: &[f64], depth: usize, max_depth: usize) -> RefTree {
    let ys: Vec<f64> = samples.iter().map(|&i| y[i]).collect();
    let value = ys.iter().sum::<f64>() / ys.len() as f64;
    if depth >= max_depth || samples.len() < 2 || gini_of(&ys) <= 1e-12 {
        return RefTree::Leaf(value);
    }
    let empty = Mask::new(x.rows(), x.cols());
    match brute_force_split(samples, x, &empty, y, 0.0) {
        None => RefTree::Leaf(value),
        Some((j, t, _)) => {
            let left: Vec<usize> = samples.iter().copied().filter(|&i| x.get(i, j) <= t).collect();
            let right: Vec<usize> = samples.iter().copied().filter(|&i| x.get(i, j) > t).collect();
            RefTree::Split {
                feature: j,
                threshold: t,
                left: Box::new(reference_cart(&left, x, y, depth + 1, max_depth)),
                right: Box::new(reference_cart(&right, x, y, depth + 1, max_depth)),
            }
        }
    }
}

/// Structural equality of a fitted tree and a reference tree.
pub fn same_structure(tree: &DecisionTree, id: usize, reference: &RefTree) -> bool {
    match (&tree.nodes[id].kind, reference) {
        (NodeKind::Leaf { value }, RefTree::Leaf(v)) => (value - v).abs() < 1e-12,
        (NodeKind::Split { feature, threshold, left, right }, RefTree::Split { feature: f, threshold: t, left: l, right: r }) => {
            feature == f
                && (threshold - t).abs() < 1e-12
                && same_structure(tree, *left, l)
                && same_structure(tree, *right, r)
        }
        _ => false,
    }
}

/// Random node data with small integer values (to create ties), random
/// missingness (imputed to zero) and binary labels.
pub fn random_node(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Matrix, Mask, Vec<f64>) {
    let mut x = Matrix::zeros(n, d);
    let mut mask = Mask::new(n, d);
    let rates: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..0.6)).collect();
    for i in 0..n {
        for j in 0..d {
            if r.gen::<f64>() < rates[j] {
                mask.set(i, j, true);
            } else {
                x.set(i, j, r.gen_range(-3..=3) as f64);
            }
        }
    }
    let y = (0..n).map(|_| r.gen_range(0..2) as f64).collect();
    (x, mask, y)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean log loss plus weighted L1 penalty, computed directly.
pub fn lasso_objective(x: &Matrix, y: &[u8], theta: &[f64], b: f64, lambda: &[f64]) -> f64 {
    let n = x.rows() as f64;
    let mut loss = 0.0;
    for i in 0..x.rows() {
        let z = b + (0..x.cols()).map(|j| theta[j] * x.get(i, j)).sum::<f64>();
        let yi = y[i] as f64;
        loss += if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() } - yi * z;
    }
    loss / n + theta.iter().zip(lambda).map(|(t, l)| l * t.abs()).sum::<f64>()
}

/// Accelerated proximal gradient (FISTA) with a fixed step from the
/// Lipschitz bound of the logistic loss.
pub fn fista_lasso(x: &Matrix, y: &[u8], lambda: &[f64], iterations: usize) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.cols());
    let frob: f64 = x.as_slice().iter().map(|v| v * v).sum::<f64>() + n as f64;
    let step = 4.0 * n as f64 / frob;
    let mut w = vec![0.0; d + 1];
    let mut v = w.clone();
    let mut t = 1.0_f64;
    for _ in 0..iterations {
        let mut grad = vec![0.0; d + 1];
        for i in 0..n {
            let z = v[d] + (0..d).map(|j| v[j] * x.get(i, j)).sum::<f64>();
            let r = sigmoid(z) - y[i] as f64;
            for j in 0..d {
                grad[j] += r * x.get(i, j) / n as f64;
            }
            grad[d] += r / n as f64;
        }
        let mut next = vec![0.0; d + 1];
        for j in 0..d {
            let u = v[j] - step * grad[j];
            let g = step * lambda[j];
            next[j] = if u > g { u - g } else if u < -g { u + g } else { 0.0 };
        }
        next[d] = v[d] - step * grad[d];
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        for k in 0..=d {
            v[k] = next[k] + (t - 1.0) / t_next * (next[k] - w[k]);
        }
        w = next;
        t = t_next;
    }
    let b = w[d];
    w.truncate(d);
    (w, b)
}

/// Random logistic-regression instance with continuous features and an
/// imputed-to-zero missingness mask.
pub fn random_lasso_instance(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Matrix, Mask, Vec<u8>) {
    let mut x = Matrix::zeros(n, d);
    let mut mask = Mask::new(n, d);
    let beta: Vec<f64> = (0..d).map(|_| r.gen_range(-1.5..1.5)).collect();
    let rates: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..0.5)).collect();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = 0.0;
        for j in 0..d {
            let v: f64 = r.gen_range(-2.0..2.0);
            z += beta[j] * v;
            if r.gen::<f64>() < rates[j] {
                mask.set(i, j, true);
            } else {
                x.set(i, j, v);
            }
        }
        y.push((r.gen::<f64>() < sigmoid(z)) as u8);
    }
    (x, mask, y)
}

/// Pairwise AUROC by enumerating every positive-negative pair.
pub fn pairwise_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for k in 0..scores.len() {
            if labels[i] == 1 && labels[k] == 0 {
                pairs += 1.0;
                if scores[i] > scores[k] {
                    wins += 1.0;
                } else if scores[i] == scores[k] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Rank-based AUROC via an O(n log n) sort with tie groups, for large samples
/// where the pairwise oracle is too slow.
pub fn pairwise_auroc_fast(scores: &[f64], labels: &[u8]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut rank_sum, mut k) = (0.0, 0);
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[k]] {
            end += 1;
        }
        let mid_rank = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += order[k..=end].iter().filter(|&&i| labels[i] == 1).count() as f64 * mid_rank;
        k = end + 1;
    }
    let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}
