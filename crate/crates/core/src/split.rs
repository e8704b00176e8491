//! Train/test partitioning by market date or at random, and stratified
//! k-fold plans for the inner ensemble.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, MonthDate};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMethod {
    Time,
    Random,
}

impl std::fmt::Display for SplitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMethod::Time => "time",
            SplitMethod::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub method: SplitMethod,
    pub threshold: Option<MonthDate>,
    pub seed: Option<u64>,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_test_positive_count: Option<usize>,
}

/// Strictly before `threshold` trains; at or after tests.
pub fn time_split(bundle: &DatasetBundle, threshold: MonthDate) -> Result<SplitPlan> {
    let undated: Vec<&str> = bundle
        .records
        .iter()
        .filter(|r| r.market_date.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !undated.is_empty() {
        return Err(Error::Split(format!(
            "time split needs a market date for every compound; missing for {}",
            undated.join(", ")
        )));
    }
    let mut train_ids = Vec::new();
    let mut test_ids = Vec::new();
    for r in &bundle.records {
        if r.market_date.expect("checked") < threshold {
            train_ids.push(r.id.clone());
        } else {
            test_ids.push(r.id.clone());
        }
    }
    train_ids.sort();
    test_ids.sort();
    if train_ids.is_empty() || test_ids.is_empty() {
        return Err(Error::Split(format!(
            "threshold {threshold} leaves {} training and {} test compounds",
            train_ids.len(),
            test_ids.len()
        )));
    }
    Ok(SplitPlan {
        method: SplitMethod::Time,
        threshold: Some(threshold),
        seed: None,
        train_ids,
        test_ids,
        fixed_test_positive_count: None,
    })
}

/// Uniform random partition. With `fixed_positives = Some((p, labels))` the
/// test set holds exactly `p` compounds labelled positive, drawn uniformly
/// among such partitions. `labels` is aligned with `bundle.compound_ids`.
pub fn random_split(
    bundle: &DatasetBundle,
    n_train: usize,
    n_test: usize,
    seed: u64,
    fixed_positives: Option<(usize, &[Option<bool>])>,
) -> Result<SplitPlan> {
    let n = bundle.len();
    if n_train + n_test != n {
        return Err(Error::Split(format!(
            "n_train + n_test = {} but the bundle has {n} compounds",
            n_train + n_test
        )));
    }
    if n_train == 0 || n_test == 0 {
        return Err(Error::Split("both sides of a random split must be non-empty".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut in_test = vec![false; n];
    match fixed_positives {
        None => {
            for i in rng.sample_indices(n, n_test) {
                in_test[i] = true;
            }
        }
        Some((p, labels)) => {
            if labels.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} labels for {n} compounds",
                    labels.len()
                )));
            }
            let (pos, other): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| labels[i] == Some(true));
            if p > pos.len() || p > n_test || n_test - p > other.len() {
                return Err(Error::Split(format!(
                    "cannot place exactly {p} positives in a test set of {n_test}: \
                     {} positives and {} other compounds available",
                    pos.len(),
                    other.len()
                )));
            }
            for i in rng.sample_indices(pos.len(), p) {
                in_test[pos[i]] = true;
            }
            for i in rng.sample_indices(other.len(), n_test - p) {
                in_test[other[i]] = true;
            }
        }
    }
    let (mut train_ids, mut test_ids) = (Vec::new(), Vec::new());
    for (i, id) in bundle.compound_ids.iter().enumerate() {
        if in_test[i] {
            test_ids.push(id.clone());
        } else {
            train_ids.push(id.clone());
        }
    }
    train_ids.sort();
    test_ids.sort();
    Ok(SplitPlan {
        method: SplitMethod::Random,
        threshold: None,
        seed: Some(seed),
        train_ids,
        test_ids,
        fixed_test_positive_count: fixed_positives.map(|(p, _)| p),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index per input row.
    pub assignments: Vec<usize>,
    pub ids: Vec<String>,
}

impl FoldPlan {
    /// Row indices belonging to fold `f`.
    pub fn fold(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == f)
            .collect()
    }

    /// Row indices outside fold `f`.
    pub fn complement(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != f)
            .collect()
    }

    pub fn by_id(&self) -> BTreeMap<&str, usize> {
        self.ids
            .iter()
            .zip(&self.assignments)
            .map(|(id, &f)| (id.as_str(), f))
            .collect()
    }
}

/// Positives and negatives are shuffled independently and dealt round-robin;
/// negatives continue from the fold after the last positive so that fold
/// sizes stay within one of each other.
pub fn stratified_kfold(ids: &[String], labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if ids.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} ids but {} labels",
            ids.len(),
            labels.len()
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    if pos.len() < k || neg.len() < k {
        return Err(Error::Split(format!(
            "stratified {k}-fold needs at least {k} positives and {k} negatives, \
             found {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    let mut assignments = vec![0; ids.len()];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignments[i] = slot % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
        ids: ids.to_vec(),
    })
}
