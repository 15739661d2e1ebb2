//! Data processes governed by observed deterministic data-collection rules,
//! and verification that fitted trees only split on features the rules
//! guarantee to be observed.

mod check;
mod interval;

pub use check::{check_tree, verify_zero_reliance, Domain, FeatureMap, FeatureSpace, NodeCheck, OddcCheck, ZeroRelianceReport};
pub use interval::{Constraint, Interval};

use std::collections::VecDeque;

use rand::Rng as _;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::sigmoid;
use crate::rng;

/// Whenever the features in `antecedent` are observed and lie in `region`,
/// feature `consequent` is observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddcRule {
    #[serde(default)]
    pub antecedent: Vec<usize>,
    #[serde(default)]
    pub region: Vec<Constraint>,
    pub consequent: usize,
}

impl OddcRule {
    /// A feature that is never missing.
    pub fn always(consequent: usize) -> Self {
        Self { antecedent: Vec::new(), region: Vec::new(), consequent }
    }

    pub fn new(antecedent: Vec<usize>, region: Vec<Constraint>, consequent: usize) -> Self {
        Self { antecedent, region, consequent }
    }

    /// True if every antecedent feature is observed and in the region.
    pub fn fires(&self, values: &[f64], observed: &[bool]) -> bool {
        self.antecedent.iter().all(|&f| observed[f]) && self.region.iter().all(|c| c.interval.contains(values[c.feature]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Integers uniform on `low..=high`.
    UniformInt { low: i64, high: i64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
    Bernoulli { p: f64 },
    /// `P(1) = sigmoid(intercept + slope * x_parent)`; the parent must come earlier.
    BernoulliLogistic { parent: usize, intercept: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub distribution: FeatureDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LabelKind {
    Bernoulli { p: f64 },
    /// The (binary) feature's value, flipped with probability `flip`.
    Copy { feature: usize, flip: f64 },
}

impl LabelKind {
    fn probability(&self, values: &[f64]) -> f64 {
        match *self {
            LabelKind::Bernoulli { p } => p,
            LabelKind::Copy { feature, flip } => {
                if values[feature] >= 0.5 {
                    1.0 - flip
                } else {
                    flip
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCase {
    pub region: Vec<Constraint>,
    pub kind: LabelKind,
}

/// Labels from the first case whose region holds the complete row, else `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub cases: Vec<LabelCase>,
    pub default: LabelKind,
}

impl LabelModel {
    /// `P(y = 1)` for a complete row.
    pub fn probability(&self, values: &[f64]) -> f64 {
        self.cases
            .iter()
            .find(|c| c.region.iter().all(|k| k.interval.contains(values[k.feature])))
            .map_or(&self.default, |c| &c.kind)
            .probability(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddcProcess {
    pub name: String,
    pub features: Vec<FeatureSpec>,
    pub rules: Vec<OddcRule>,
    /// Missingness probability of each feature where no rule forces it observed.
    pub baseline_missingness: Vec<f64>,
    pub label: LabelModel,
    #[serde(default)]
    pub seed: u64,
}

impl OddcProcess {
    /// Age, a cognitive test given to everyone over 65 and an MRI scan taken
    /// whenever the test is positive. The label depends on the scan only for
    /// patients over 65 with a positive test.
    pub fn clinic() -> Self {
        let above_65 = Constraint::new(0, Interval::greater_than(65.0));
        let positive = Constraint::new(1, Interval::point(1.0));
        Self {
            name: "clinic".into(),
            features: vec![
                FeatureSpec { name: "age".into(), distribution: FeatureDistribution::UniformInt { low: 40, high: 90 } },
                FeatureSpec {
                    name: "cognitive_test".into(),
                    distribution: FeatureDistribution::BernoulliLogistic { parent: 0, intercept: -13.0, slope: 0.2 },
                },
                FeatureSpec { name: "mri".into(), distribution: FeatureDistribution::Bernoulli { p: 0.5 } },
            ],
            rules: vec![
                OddcRule::always(0),
                OddcRule::new(vec![0], vec![above_65], 1),
                OddcRule::new(vec![1], vec![positive], 2),
            ],
            baseline_missingness: vec![0.0, 0.6, 0.6],
            label: LabelModel {
                cases: vec![LabelCase {
                    region: vec![above_65, positive],
                    kind: LabelKind::Copy { feature: 2, flip: 0.1 },
                }],
                default: LabelKind::Bernoulli { p: 0.1 },
            },
            seed: 0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Checks indices and probabilities and returns the order in which
    /// observation is decided (antecedents before consequents).
    pub fn validate(&self) -> Result<Vec<usize>> {
        let d = self.features.len();
        let spec = |m: String| Err(Error::Specification(m));
        if d == 0 {
            return spec("process has no features".into());
        }
        if self.baseline_missingness.len() != d {
            return spec(format!("{} baseline rates for {d} features", self.baseline_missingness.len()));
        }
        if self.baseline_missingness.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return spec("baseline rates must lie in [0, 1]".into());
        }
        for (j, f) in self.features.iter().enumerate() {
            match f.distribution {
                FeatureDistribution::UniformInt { low, high } if low > high => {
                    return spec(format!("feature {j}: empty integer range"))
                }
                FeatureDistribution::Uniform { low, high } if !(low < high) => {
                    return spec(format!("feature {j}: empty range"))
                }
                FeatureDistribution::Normal { std, .. } if !(std > 0.0) => {
                    return spec(format!("feature {j}: standard deviation must be positive"))
                }
                FeatureDistribution::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                    return spec(format!("feature {j}: probability outside [0, 1]"))
                }
                FeatureDistribution::BernoulliLogistic { parent, .. } if parent >= j => {
                    return spec(format!("feature {j}: parent {parent} must precede it"))
                }
                _ => {}
            }
        }
        let in_range = |f: usize| f < d;
        for (r, rule) in self.rules.iter().enumerate() {
            if !in_range(rule.consequent) || !rule.antecedent.iter().copied().all(in_range) {
                return spec(format!("rule {r} references an unknown feature"));
            }
            if rule.antecedent.contains(&rule.consequent) {
                return spec(format!("rule {r}: consequent is part of its antecedent"));
            }
            if rule.region.iter().any(|c| !rule.antecedent.contains(&c.feature)) {
                return spec(format!("rule {r}: region constrains a feature outside the antecedent"));
            }
        }
        for case in &self.label.cases {
            if case.region.iter().any(|c| !in_range(c.feature)) {
                return spec("label case references an unknown feature".into());
            }
        }
        for kind in self.label.cases.iter().map(|c| &c.kind).chain([&self.label.default]) {
            if let LabelKind::Copy { feature, .. } = kind {
                if !in_range(*feature) {
                    return spec("label copies an unknown feature".into());
                }
            }
        }
        self.observation_order()
    }

    /// Topological order of the rule graph (antecedent -> consequent).
    fn observation_order(&self) -> Result<Vec<usize>> {
        let d = self.features.len();
        let mut indegree = vec![0usize; d];
        let mut edges = vec![Vec::new(); d];
        for rule in &self.rules {
            for &t in &rule.antecedent {
                edges[t].push(rule.consequent);
                indegree[rule.consequent] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
        let mut order = Vec::with_capacity(d);
        while let Some(j) = queue.pop_front() {
            order.push(j);
            for &k in &edges[j] {
                indegree[k] -= 1;
                if indegree[k] == 0 {
                    queue.push_back(k);
                }
            }
        }
        if order.len() < d {
            let stuck: Vec<usize> = (0..d).filter(|&j| indegree[j] > 0).collect();
            return Err(Error::Specification(format!("rule cycle through features {stuck:?}")));
        }
        Ok(order)
    }

    fn sample_values(&self, rng: &mut rng::Rng, out: &mut [f64]) {
        for (j, f) in self.features.iter().enumerate() {
            out[j] = match f.distribution {
                FeatureDistribution::UniformInt { low, high } => rng.gen_range(low..=high) as f64,
                FeatureDistribution::Uniform { low, high } => rng.gen_range(low..high),
                FeatureDistribution::Normal { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
                FeatureDistribution::Bernoulli { p } => (rng.gen::<f64>() < p) as u8 as f64,
                FeatureDistribution::BernoulliLogistic { parent, intercept, slope } => {
                    (rng.gen::<f64>() < sigmoid(intercept + slope * out[parent])) as u8 as f64
                }
            };
        }
    }
}

/// Draws `n` rows: complete values, then observation decided in rule order
/// (forced when a rule fires, otherwise missing at the baseline rate), then
/// labels from the complete values.
pub fn generate(process: &OddcProcess, n: usize, seed: u64) -> Result<Dataset> {
    let order = process.validate()?;
    let d = process.n_features();
    let mut rng = rng::seeded(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut values = vec![0.0; d];
    let mut observed = vec![false; d];
    for _ in 0..n {
        process.sample_values(&mut rng, &mut values);
        for &j in &order {
            let u: f64 = rng.gen();
            let forced = process.rules.iter().any(|r| r.consequent == j && r.fires(&values, &observed));
            observed[j] = forced || u >= process.baseline_missingness[j];
        }
        let p = process.label.probability(&values);
        labels.push((rng.gen::<f64>() < p) as u8);
        data.extend(values.iter().zip(&observed).map(|(&v, &o)| if o { v } else { f64::NAN }));
    }
    let columns = process.features.iter().map(|f| Column::numeric(f.name.clone())).collect();
    Dataset::new(columns, Matrix::from_vec(n, d, data), labels, "y")
}

/// Exact joint distribution of complete rows for processes whose features are
/// all discrete, as `(values, probability)` pairs.
pub fn enumerate_joint(process: &OddcProcess) -> Result<Vec<(Vec<f64>, f64)>> {
    process.validate()?;
    let mut states: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for (j, f) in process.features.iter().enumerate() {
        let mut next = Vec::new();
        for (vals, p) in &states {
            let outcomes: Vec<(f64, f64)> = match f.distribution {
                FeatureDistribution::UniformInt { low, high } => {
                    let k = (high - low + 1) as f64;
                    (low..=high).map(|v| (v as f64, 1.0 / k)).collect()
                }
                FeatureDistribution::Bernoulli { p } => vec![(0.0, 1.0 - p), (1.0, p)],
                FeatureDistribution::BernoulliLogistic { parent, intercept, slope } => {
                    let q = sigmoid(intercept + slope * vals[parent]);
                    vec![(0.0, 1.0 - q), (1.0, q)]
                }
                _ => return Err(Error::Specification(format!("feature {j} is continuous; cannot enumerate"))),
            };
            for (v, q) in outcomes {
                let mut row = vals.clone();
                row.push(v);
                next.push((row, p * q));
            }
        }
        states = next;
    }
    Ok(states)
}

/// Population AUROC of the score `P(y = 1 | complete row)`, computed exactly
/// on a discrete process.
pub fn bayes_auroc(process: &OddcProcess) -> Result<f64> {
    let joint = enumerate_joint(process)?;
    let mut groups: Vec<(f64, f64, f64)> = joint
        .iter()
        .map(|(row, p)| {
            let q = process.label.probability(row);
            (q, p * q, p * (1.0 - q))
        })
        .collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut neg_below, mut wins, mut pos_total, mut neg_total) = (0.0, 0.0, 0.0, 0.0);
    let mut k = 0;
    while k < groups.len() {
        let score = groups[k].0;
        let (mut pos, mut neg) = (0.0, 0.0);
        while k < groups.len() && groups[k].0 == score {
            pos += groups[k].1;
            neg += groups[k].2;
            k += 1;
        }
        wins += pos * (neg_below + 0.5 * neg);
        neg_below += neg;
        pos_total += pos;
        neg_total += neg;
    }
    if pos_total == 0.0 || neg_total == 0.0 {
        return Err(Error::UndefinedMetric("process has a single class".into()));
    }
    Ok(wins / (pos_total * neg_total))
}
