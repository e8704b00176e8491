//! Classification metrics: accuracy, F1 and MCC from a thresholded confusion
//! matrix, ROC AUC by Mann-Whitney pair counting, PR AUC as average precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], labels: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &l) in predicted.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// `2TP / (2TP + FP + FN)`; 0 when nothing is positive on either side.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    /// Matthews correlation; 0 when any marginal is empty.
    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            ((tp * tn - fp * fn_) / denom).clamp(-1.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    /// `None` when the labels contain a single class.
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    F1,
    Mcc,
    RocAuc,
    PrAuc,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::RocAuc,
        Metric::PrAuc,
        Metric::Accuracy,
        Metric::F1,
        Metric::Mcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Mcc => "mcc",
            Metric::RocAuc => "roc_auc",
            Metric::PrAuc => "pr_auc",
        }
    }
}

impl MetricSet {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Accuracy => Some(self.accuracy),
            Metric::F1 => Some(self.f1),
            Metric::Mcc => Some(self.mcc),
            Metric::RocAuc => self.roc_auc,
            Metric::PrAuc => self.pr_auc,
        }
    }
}

/// Indices sorted by ascending score; ties keep index order.
fn ascending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    idx
}

/// ROC AUC: the fraction of (positive, negative) pairs ranked correctly,
/// with ties worth one half. Counted in half-units so the result is the exact
/// rational rounded once.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    roc_auc_counts(scores, labels).map(|(num, den)| num as f64 / den as f64)
}

/// ROC AUC as the exact fraction `(2·U, 2·n_pos·n_neg)`.
pub fn roc_auc_counts(scores: &[f64], labels: &[bool]) -> Option<(u64, u64)> {
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let order = ascending(scores);
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut pos_here, mut neg_here) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            i += 1;
        }
        twice_u += 2 * pos_here * neg_below + pos_here * neg_here;
        neg_below += neg_here;
    }
    Some((twice_u, 2 * n_pos * n_neg))
}

/// Average precision: `Σ (R_k − R_{k−1}) · P_k` over distinct score
/// thresholds taken from the top.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let mut order = ascending(scores);
    order.reverse();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut tp_here = 0;
        while i < order.len() && scores[order[i]] == s {
            tp_here += usize::from(labels[order[i]]);
            seen += 1;
            i += 1;
        }
        if tp_here > 0 {
            tp += tp_here;
            ap += (tp_here as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Some(ap)
}

pub fn compute_metrics(probabilities: &[f64], labels: &[bool], threshold: f64) -> Result<MetricSet> {
    if probabilities.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probabilities for {} labels",
            probabilities.len(),
            labels.len()
        )));
    }
    if probabilities.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("probabilities"));
    }
    let predicted: Vec<bool> = probabilities.iter().map(|&p| p >= threshold).collect();
    let c = Confusion::from_predictions(&predicted, labels);
    Ok(MetricSet {
        accuracy: c.accuracy(),
        f1: c.f1(),
        mcc: c.mcc(),
        roc_auc: roc_auc(probabilities, labels),
        pr_auc: average_precision(probabilities, labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let m = compute_metrics(&[0.9, 0.8, 0.3, 0.2], &[true, true, false, false], 0.5).unwrap();
        assert_eq!(m.roc_auc, Some(1.0));
        assert_eq!(m.pr_auc, Some(1.0));
        assert_eq!((m.accuracy, m.f1, m.mcc), (1.0, 1.0, 1.0));
    }

    #[test]
    fn partial_ordering() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
        assert_eq!(average_precision(&[0.9, 0.1], &[false, true]), Some(0.5));
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]), Some(0.5));
        assert_eq!(roc_auc(&[0.5, 0.5, 0.5], &[true, false, false]), Some(0.5));
    }

    #[test]
    fn balanced_confusion_has_zero_mcc() {
        let c = Confusion { tp: 1, fp: 1, tn: 1, fn_: 1 };
        assert_eq!(c.mcc(), 0.0);
        assert_eq!(c.accuracy(), 0.5);
        assert_eq!(c.f1(), 0.5);
    }

    #[test]
    fn single_class_leaves_ranking_metrics_undefined() {
        let m = compute_metrics(&[0.9, 0.2], &[true, true], 0.5).unwrap();
        assert_eq!(m.roc_auc, None);
        assert_eq!(m.pr_auc, None);
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn threshold_is_inclusive() {
        let m = compute_metrics(&[0.5, 0.4], &[true, false], 0.5).unwrap();
        assert_eq!(m.accuracy, 1.0);
    }
}
