//! Graphviz export.

use std::fmt::Write;

use super::{DecisionTree, NodeKind};
use crate::dataset::ImputedDataset;

/// Fraction of rows reaching each node that are missing the node's split
/// feature. Leaves and unreached nodes get `0.0`.
pub fn node_missingness(tree: &DecisionTree, data: &ImputedDataset) -> Vec<f64> {
    let mut reached = vec![0usize; tree.nodes.len()];
    let mut missing = vec![0usize; tree.nodes.len()];
    for i in 0..data.n_rows() {
        tree.for_each_split_on_path(data.x.row(i), |feature, id| {
            reached[id] += 1;
            if data.mask.get(i, feature) {
                missing[id] += 1;
            }
        });
    }
    reached
        .iter()
        .zip(&missing)
        .map(|(&r, &m)| if r > 0 { m as f64 / r as f64 } else { 0.0 })
        .collect()
}

fn color(fraction: f64) -> String {
    // Blue for fully observed, orange for fully missing.
    let (b, o) = ([0x4c, 0x72, 0xb0], [0xdd, 0x84, 0x52]);
    let t = fraction.clamp(0.0, 1.0);
    let mix = |k: usize| (b[k] as f64 + t * (o[k] as f64 - b[k] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `tree` as a DOT digraph. `missingness`, if given, colors internal
/// nodes from blue to orange.
pub fn to_dot(tree: &DecisionTree, feature_names: &[String], missingness: Option<&[f64]>) -> String {
    let mut out = String::from("digraph tree {\n  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\", fillcolor=\"#ffffff\"];\n");
    for node in &tree.nodes {
        match node.kind {
            NodeKind::Split { feature, threshold, left, right } => {
                let name = feature_names.get(feature).cloned().unwrap_or_else(|| format!("x{feature}"));
                let fill = missingness.map_or_else(|| "#ffffff".to_string(), |m| color(m[node.id]));
                let _ = writeln!(
                    out,
                    "  n{} [label=\"{} ≤ {:.4}\\nn = {}\", fillcolor=\"{}\"];",
                    node.id,
                    escape(&name),
                    threshold,
                    node.n_samples,
                    fill
                );
                let _ = writeln!(out, "  n{} -> n{} [label=\"yes\"];", node.id, left);
                let _ = writeln!(out, "  n{} -> n{} [label=\"no\"];", node.id, right);
            }
            NodeKind::Leaf { value } => {
                let _ = writeln!(out, "  n{} [label=\"value = {:.4}\\nn = {}\"];", node.id, value, node.n_samples);
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{Mask, Matrix};
    use crate::tree::TreeParams;

    #[test]
    fn renders_split_and_leaves() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]);
        let mask = Mask::from_rows(&[vec![true], vec![false], vec![false], vec![false]]);
        let data = ImputedDataset::with_mask(x, mask, vec![0, 0, 1, 1]);
        let tree = DecisionTree::fit(&data, &TreeParams::default()).unwrap();
        let m = node_missingness(&tree, &data);
        assert_eq!(m[0], 0.25);
        let dot = to_dot(&tree, &["age".to_string()], Some(&m));
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("age ≤ 0.5000"));
        assert!(dot.contains("value = 1.0000"));
        assert_eq!(color(0.0), "#4c72b0");
        assert_eq!(color(1.0), "#dd8452");
    }
}
