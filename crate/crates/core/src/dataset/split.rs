use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One cross-validation fold: indices to fit on and indices to validate on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

fn class_indices(labels: &[u8], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = rng::seeded(seed);
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[y as usize].push(i);
    }
    for class in &mut classes {
        class.shuffle(&mut rng);
    }
    classes
}

/// Stratified train/test split. The test set has `round(test_fraction * n)`
/// rows, allocated across classes by largest remainder.
pub fn train_test_indices(labels: &[u8], test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::Config("need at least two rows to split".into()));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let classes = class_indices(labels, seed);
    let ideal: Vec<f64> = classes.iter().map(|c| n_test as f64 * c.len() as f64 / n as f64).collect();
    let mut take: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut remaining = n_test - take.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())));
    for &c in order.iter().cycle().take(4) {
        if remaining == 0 {
            break;
        }
        if take[c] < classes[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (class, &k) in classes.iter().zip(&take) {
        test.extend_from_slice(&class[..k]);
        train.extend_from_slice(&class[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn train_test_split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let split = train_test_indices(dataset.labels(), test_fraction, seed)?;
    Ok((dataset.select_rows(&split.train), dataset.select_rows(&split.test)))
}

/// Stratified k-fold partition. Rows of each class are shuffled and dealt
/// round-robin, so fold sizes and per-fold class counts differ by at most one.
pub fn kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("k = {k}; need at least 2 folds")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("k = {k} exceeds {} rows", labels.len())));
    }
    let classes = class_indices(labels, seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for class in &classes {
        for &i in class {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}
