//! Plain-text renderings for `inspect`.

use std::fmt::Write;

use crate::ensemble::Ensemble;
use crate::linear::LinearModel;
use crate::tree::{DecisionTree, NodeKind};

fn name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
}

/// Indented rules, left branch first.
pub fn tree_text(tree: &DecisionTree, names: &[String]) -> String {
    let mut out = String::new();
    let mut stack = vec![(tree.root, 0usize, String::new())];
    while let Some((id, depth, prefix)) = stack.pop() {
        let node = tree.node(id);
        let indent = "  ".repeat(depth);
        match node.kind {
            NodeKind::Split { feature, threshold, left, right } => {
                let f = name(names, feature);
                let _ = writeln!(out, "{indent}{prefix}{f} <= {threshold:.4} (n={})", node.n_samples);
                stack.push((right, depth + 1, "else: ".into()));
                stack.push((left, depth + 1, "then: ".into()));
            }
            NodeKind::Leaf { value } => {
                let _ = writeln!(out, "{indent}{prefix}value {value:.4} (n={})", node.n_samples);
            }
        }
    }
    out
}

/// Coefficient table sorted by decreasing |theta|, ties by feature order.
pub fn linear_table(model: &LinearModel, missing_rates: &[f64]) -> String {
    let mut order: Vec<usize> = (0..model.theta.len()).collect();
    order.sort_by(|&a, &b| model.theta[b].abs().total_cmp(&model.theta[a].abs()).then(a.cmp(&b)));
    let width = model.feature_names.iter().map(String::len).max().unwrap_or(7).max(7);
    let mut out = format!("{:<width$}  {:>12}  {:>12}  {:>10}\n", "feature", "theta", "lambda_j", "m_bar_j");
    for j in order {
        let m = missing_rates.get(j).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.6}  {:>12.6}  {:>10.4}",
            name(&model.feature_names, j),
            model.theta[j],
            model.penalty_weights[j],
            m
        );
    }
    let _ = writeln!(out, "{:<width$}  {:>12.6}", "(intercept)", model.intercept);
    out
}

pub fn ensemble_text(ens: &Ensemble, names: &[String]) -> String {
    let mut out = format!(
        "{:?} ensemble: {} trees, base score {:.4}, learning rate {}\n",
        ens.kind,
        ens.len(),
        ens.base_score,
        ens.gamma
    );
    for (t, tree) in ens.trees.iter().enumerate() {
        let used: Vec<String> = tree.used_features().into_iter().map(|j| name(names, j)).collect();
        let _ = writeln!(out, "tree {t}: depth {}, {} leaves, uses [{}]", tree.depth(), tree.n_leaves(), used.join(", "));
    }
    out
}
