//! Rule satisfaction of tree nodes, and empirical confirmation of zero reliance.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{generate, Interval, OddcProcess, OddcRule};
use crate::dataset::{ColumnKind, Dataset, EncodedKind, Encoder, Preprocessor, Standardization};
use crate::error::{Error, Result};
use crate::reliance::Reliance;
use crate::tree::{DecisionTree, NodeKind};

/// Numeric columns with at most this many distinct observed values are
/// treated as discrete when deciding region containment.
pub const MAX_DISCRETE_VALUES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Continuous,
    /// Sorted observed values.
    Discrete(Vec<f64>),
}

impl Domain {
    fn of_column(data: &Dataset, j: usize) -> Self {
        let mut values: Vec<f64> = (0..data.n_rows())
            .map(|i| data.values().get(i, j))
            .filter(|v| !v.is_nan())
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() <= MAX_DISCRETE_VALUES {
            Domain::Discrete(values)
        } else {
            Domain::Continuous
        }
    }

    fn is_empty_within(&self, iv: &Interval) -> bool {
        match self {
            Domain::Continuous => iv.is_empty(),
            Domain::Discrete(vals) => !vals.iter().any(|&v| iv.contains(v)),
        }
    }

    /// Whether every domain point in `iv` lies in `target`.
    fn within(&self, iv: &Interval, target: &Interval) -> bool {
        match self {
            Domain::Continuous => iv.is_subset_of(target),
            Domain::Discrete(vals) => vals.iter().filter(|&&v| iv.contains(v)).all(|&v| target.contains(v)),
        }
    }

    /// Elementary pieces of `iv` cut at `cuts`: single points and open gaps
    /// (continuous), or the domain points inside `iv` (discrete).
    fn pieces(&self, iv: &Interval, cuts: &[f64]) -> Vec<Interval> {
        match self {
            Domain::Discrete(vals) => vals.iter().filter(|&&v| iv.contains(v)).map(|&v| Interval::point(v)).collect(),
            Domain::Continuous => {
                if iv.is_empty() {
                    return Vec::new();
                }
                let mut points: Vec<f64> = cuts.iter().copied().filter(|&c| iv.contains(c)).collect();
                points.extend(iv.lo.filter(|&l| iv.contains(l)));
                points.extend(iv.hi.filter(|&h| iv.contains(h)));
                points.sort_by(f64::total_cmp);
                points.dedup();
                let mut bounds: Vec<Option<f64>> = vec![iv.lo];
                bounds.extend(points.iter().map(|&p| Some(p)));
                bounds.push(iv.hi);
                let mut out: Vec<Interval> = points.iter().map(|&p| Interval::point(p)).collect();
                for w in bounds.windows(2) {
                    let gap = Interval { lo: w[0], hi: w[1], lo_closed: false, hi_closed: false };
                    if !gap.is_empty() {
                        out.push(gap);
                    }
                }
                out
            }
        }
    }
}

/// How a tree feature relates to the raw process features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    /// Raw feature index; `None` for one-hot indicators, which are not supported.
    pub raw: Option<usize>,
    pub scale: Option<Standardization>,
}

/// Maps tree features back to raw features and records raw domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub tree_features: Vec<FeatureMap>,
    pub domains: Vec<Domain>,
    pub raw_names: Vec<String>,
}

impl FeatureSpace {
    /// Tree features are the raw columns of `reference` in order.
    pub fn raw(reference: &Dataset) -> Self {
        let tree_features = reference
            .columns()
            .iter()
            .enumerate()
            .map(|(j, c)| FeatureMap { raw: (c.kind == ColumnKind::Numeric).then_some(j), scale: None })
            .collect();
        Self::with_features(reference, tree_features)
    }

    /// Tree features are the encoder's outputs; thresholds are mapped back
    /// through the stored standardization.
    pub fn from_encoder(encoder: &Encoder, reference: &Dataset) -> Self {
        let tree_features = encoder
            .features
            .iter()
            .map(|f| match f.kind {
                EncodedKind::Numeric { scale } => FeatureMap { raw: Some(f.source), scale },
                EncodedKind::Indicator { .. } => FeatureMap { raw: None, scale: None },
            })
            .collect();
        Self::with_features(reference, tree_features)
    }

    fn with_features(reference: &Dataset, tree_features: Vec<FeatureMap>) -> Self {
        Self {
            tree_features,
            domains: (0..reference.n_cols()).map(|j| Domain::of_column(reference, j)).collect(),
            raw_names: reference.columns().iter().map(|c| c.name.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub node: usize,
    pub feature: usize,
    pub raw_feature: Option<usize>,
    /// Some single rule for the split feature is activated.
    pub satisfied: bool,
    /// The union of regions of same-consequent rules covers the node.
    pub satisfied_union: bool,
    pub activating_rules: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddcCheck {
    pub satisfied: bool,
    pub satisfied_union: bool,
    pub nodes: Vec<NodeCheck>,
    pub violating: Vec<usize>,
    pub violating_union: Vec<usize>,
    /// Cases the check could not decide and treated as unsatisfied, and
    /// assumptions it relied on.
    pub notes: Vec<String>,
}

struct Walker<'a> {
    tree: &'a DecisionTree,
    rules: &'a [OddcRule],
    space: &'a FeatureSpace,
    nodes: Vec<NodeCheck>,
    notes: BTreeSet<String>,
}

impl Walker<'_> {
    /// Raw features implied observed for rows in `bx`. With `union`, rules with
    /// the same consequent may jointly cover the box.
    fn observed(&self, bx: &[Interval], union: bool) -> BTreeSet<usize> {
        let mut obs = BTreeSet::new();
        loop {
            let mut grew = false;
            let consequents: BTreeSet<usize> = self.rules.iter().map(|r| r.consequent).collect();
            for c in consequents {
                if obs.contains(&c) {
                    continue;
                }
                let ready: Vec<&OddcRule> = self
                    .rules
                    .iter()
                    .filter(|r| r.consequent == c && r.antecedent.iter().all(|t| obs.contains(t)))
                    .collect();
                let fires = ready.iter().any(|r| self.region_holds(r, bx)) || (union && self.union_covers(&ready, bx));
                if fires {
                    obs.insert(c);
                    grew = true;
                }
            }
            if !grew {
                return obs;
            }
        }
    }

    fn region_holds(&self, rule: &OddcRule, bx: &[Interval]) -> bool {
        rule.region.iter().all(|c| self.space.domains[c.feature].within(&bx[c.feature], &c.interval))
    }

    fn union_covers(&self, rules: &[&OddcRule], bx: &[Interval]) -> bool {
        if rules.is_empty() {
            return false;
        }
        let features: BTreeSet<usize> = rules.iter().flat_map(|r| r.region.iter().map(|c| c.feature)).collect();
        let axes: Vec<(usize, Vec<Interval>)> = features
            .iter()
            .map(|&f| {
                let cuts: Vec<f64> = rules
                    .iter()
                    .flat_map(|r| r.region.iter().filter(|c| c.feature == f))
                    .flat_map(|c| [c.interval.lo, c.interval.hi])
                    .flatten()
                    .collect();
                (f, self.space.domains[f].pieces(&bx[f], &cuts))
            })
            .collect();
        if axes.iter().any(|(_, p)| p.is_empty()) {
            return true;
        }
        // Every cell of the grid must lie in one rule's region.
        let mut idx = vec![0usize; axes.len()];
        loop {
            let covered = rules.iter().any(|r| {
                r.region.iter().all(|c| {
                    let a = axes.iter().position(|(f, _)| *f == c.feature).expect("axis per feature");
                    axes[a].1[idx[a]].is_subset_of(&c.interval)
                })
            });
            if !covered {
                return false;
            }
            let mut k = 0;
            loop {
                if k == axes.len() {
                    return true;
                }
                idx[k] += 1;
                if idx[k] < axes[k].1.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn visit(&mut self, id: usize, bx: &mut Vec<Interval>) {
        let NodeKind::Split { feature, threshold, left, right } = self.tree.nodes[id].kind else {
            return;
        };
        let map = self.space.tree_features.get(feature).cloned().unwrap_or(FeatureMap { raw: None, scale: None });
        let unreachable = bx.iter().zip(&self.space.domains).any(|(iv, d)| d.is_empty_within(iv));
        let (satisfied, satisfied_union, activating) = match map.raw {
            None => {
                self.notes.insert(format!("node {id}: split on a feature with no numeric raw source; not decided"));
                (false, false, Vec::new())
            }
            Some(_) if unreachable => {
                self.notes.insert(format!("node {id}: ancestor constraints are unsatisfiable; passes vacuously"));
                (true, true, Vec::new())
            }
            Some(j) => {
                let obs = self.observed(bx, false);
                let obs_union = self.observed(bx, true);
                let activating = (0..self.rules.len())
                    .filter(|&r| {
                        let rule = &self.rules[r];
                        rule.consequent == j
                            && rule.antecedent.iter().all(|t| obs.contains(t))
                            && self.region_holds(rule, bx)
                    })
                    .collect();
                (obs.contains(&j), obs_union.contains(&j), activating)
            }
        };
        if satisfied_union && !satisfied {
            self.notes.insert(format!("node {id}: only the union of rule regions covers it"));
        }
        self.nodes.push(NodeCheck {
            node: id,
            feature,
            raw_feature: map.raw,
            satisfied,
            satisfied_union,
            activating_rules: activating,
        });
        let Some(j) = map.raw else {
            self.visit(left, bx);
            self.visit(right, bx);
            return;
        };
        let t = map.scale.map_or(threshold, |s| s.invert(threshold));
        let saved = bx[j];
        bx[j] = saved.intersect(&Interval::at_most(t));
        self.visit(left, bx);
        bx[j] = saved.intersect(&Interval::greater_than(t));
        self.visit(right, bx);
        bx[j] = saved;
    }
}

/// Decides for every internal node whether its ancestors' split outcomes
/// imply, through the rules, that its split feature is observed.
pub fn check_tree(tree: &DecisionTree, rules: &[OddcRule], space: &FeatureSpace) -> OddcCheck {
    let mut walker = Walker { tree, rules, space, nodes: Vec::new(), notes: BTreeSet::new() };
    for (j, d) in space.domains.iter().enumerate() {
        if let Domain::Discrete(v) = d {
            walker.notes.insert(format!(
                "feature {} treated as discrete with the {} values seen in the reference data",
                space.raw_names.get(j).map_or("?", |s| s.as_str()),
                v.len()
            ));
        }
    }
    let mut bx = vec![Interval::all(); space.domains.len()];
    walker.visit(tree.root, &mut bx);
    let mut nodes = walker.nodes;
    nodes.sort_by_key(|n| n.node);
    let violating: Vec<usize> = nodes.iter().filter(|n| !n.satisfied).map(|n| n.node).collect();
    let violating_union: Vec<usize> = nodes.iter().filter(|n| !n.satisfied_union).map(|n| n.node).collect();
    OddcCheck {
        satisfied: violating.is_empty(),
        satisfied_union: violating_union.is_empty(),
        nodes,
        violating,
        violating_union,
        notes: walker.notes.into_iter().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRelianceReport {
    pub n_evaluated: usize,
    pub rho_hat: f64,
    pub seed: u64,
}

/// Draws `n_check` fresh rows from `process`, preprocesses them like the
/// training data and requires zero reliance on every row.
pub fn verify_zero_reliance<M: Reliance + ?Sized>(
    model: &M,
    preprocessor: &Preprocessor,
    process: &OddcProcess,
    n_check: usize,
    seed: u64,
) -> Result<ZeroRelianceReport> {
    let raw = generate(process, n_check, seed)?;
    let data = preprocessor.transform(&raw)?;
    let mut used = vec![false; model.n_features()];
    for i in 0..data.n_rows() {
        used.iter_mut().for_each(|u| *u = false);
        model.mark_used(data.x.row(i), &mut used);
        let m = data.mask.row(i);
        let relied: Vec<&str> = (0..used.len())
            .filter(|&j| used[j] && m[j])
            .map(|j| data.feature_names[j].as_str())
            .collect();
        if !relied.is_empty() {
            let row: Vec<String> = raw.values().row(i).iter().map(|v| format!("{v}")).collect();
            return Err(Error::PropertyViolation(format!(
                "row {i} ({}) relies on missing features {relied:?}",
                row.join(", ")
            )));
        }
    }
    Ok(ZeroRelianceReport { n_evaluated: data.n_rows(), rho_hat: 0.0, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ImputeStrategy;
    use crate::oddc::Constraint;
    use crate::tree::{Node, Task, TreeParams};

    fn split(id: usize, feature: usize, threshold: f64, left: usize, right: usize) -> Node {
        Node { id, kind: NodeKind::Split { feature, threshold, left, right }, n_samples: 0 }
    }

    fn leaf(id: usize) -> Node {
        Node { id, kind: NodeKind::Leaf { value: 0.5 }, n_samples: 0 }
    }

    fn tree(nodes: Vec<Node>) -> DecisionTree {
        DecisionTree { nodes, root: 0, params: TreeParams::default(), task: Task::Classify, n_features: 3 }
    }

    fn clinic_space() -> (OddcProcess, FeatureSpace) {
        let p = OddcProcess::clinic();
        let reference = generate(&p, 2000, 1).unwrap();
        let space = FeatureSpace::raw(&reference);
        (p, space)
    }

    /// age > 65.5, then test > 0.5, then mri.
    fn cascade() -> DecisionTree {
        tree(vec![
            split(0, 0, 65.5, 1, 2),
            leaf(1),
            split(2, 1, 0.5, 3, 4),
            leaf(3),
            split(4, 2, 0.5, 5, 6),
            leaf(5),
            leaf(6),
        ])
    }

    #[test]
    fn leaf_only_tree_passes() {
        let (p, space) = clinic_space();
        assert!(check_tree(&tree(vec![leaf(0)]), &p.rules, &space).satisfied);
    }

    #[test]
    fn cascade_passes() {
        let (p, space) = clinic_space();
        let check = check_tree(&cascade(), &p.rules, &space);
        assert!(check.satisfied && check.satisfied_union, "{check:?}");
        assert_eq!(check.nodes.len(), 3);
    }

    #[test]
    fn mri_at_root_fails() {
        let (p, space) = clinic_space();
        let t = tree(vec![split(0, 2, 0.5, 1, 2), leaf(1), leaf(2)]);
        let check = check_tree(&t, &p.rules, &space);
        assert!(!check.satisfied);
        assert_eq!(check.violating, vec![0]);
    }

    #[test]
    fn wrong_branch_fails() {
        let (p, space) = clinic_space();
        // Test split under age <= 65.5.
        let t = tree(vec![split(0, 0, 65.5, 1, 2), split(1, 1, 0.5, 3, 4), leaf(2), leaf(3), leaf(4)]);
        assert_eq!(check_tree(&t, &p.rules, &space).violating, vec![1]);
    }

    #[test]
    fn union_of_regions() {
        let (_, space) = clinic_space();
        let rules = vec![
            OddcRule::always(0),
            OddcRule::new(vec![0], vec![Constraint::new(0, Interval::greater_than(70.0))], 1),
            OddcRule::new(vec![0], vec![Constraint::new(0, Interval { lo: Some(60.0), hi: Some(75.0), lo_closed: false, hi_closed: true })], 1),
        ];
        let t = tree(vec![split(0, 0, 65.5, 1, 2), leaf(1), split(2, 1, 0.5, 3, 4), leaf(3), leaf(4)]);
        let check = check_tree(&t, &rules, &space);
        assert!(!check.satisfied);
        assert!(check.satisfied_union);
        assert!(check.notes.iter().any(|n| n.contains("union")));
    }

    #[test]
    fn adding_rules_keeps_satisfaction() {
        let (p, space) = clinic_space();
        let mut rules = p.rules.clone();
        rules.push(OddcRule::always(2));
        assert!(check_tree(&cascade(), &rules, &space).satisfied);
        let t = tree(vec![split(0, 2, 0.5, 1, 2), leaf(1), leaf(2)]);
        assert!(check_tree(&t, &rules, &space).satisfied);
    }

    #[test]
    fn standardized_thresholds_map_back() {
        let p = OddcProcess::clinic();
        let reference = generate(&p, 2000, 1).unwrap();
        let pre = Preprocessor::fit(&reference, true, ImputeStrategy::Zero);
        let space = FeatureSpace::from_encoder(&pre.encoder, &reference);
        let s: Vec<Standardization> = space.tree_features.iter().map(|f| f.scale.unwrap()).collect();
        let mut t = cascade();
        for node in &mut t.nodes {
            if let NodeKind::Split { feature, threshold, .. } = &mut node.kind {
                *threshold = s[*feature].apply(*threshold);
            }
        }
        assert!(check_tree(&t, &p.rules, &space).satisfied);
    }

    #[test]
    fn zero_reliance_on_cascade_and_violation() {
        let p = OddcProcess::clinic();
        let reference = generate(&p, 500, 2).unwrap();
        let pre = Preprocessor::fit(&reference, false, ImputeStrategy::Zero);
        let report = verify_zero_reliance(&cascade(), &pre, &p, 10_000, 5).unwrap();
        assert_eq!((report.n_evaluated, report.rho_hat), (10_000, 0.0));
        let stump = tree(vec![split(0, 0, 65.5, 1, 2), leaf(1), leaf(2)]);
        assert!(verify_zero_reliance(&stump, &pre, &p, 10_000, 5).is_ok());
        let bad = tree(vec![split(0, 2, 0.5, 1, 2), leaf(1), leaf(2)]);
        assert!(matches!(verify_zero_reliance(&bad, &pre, &p, 1000, 5), Err(Error::PropertyViolation(_))));
    }
}
