//! Permutation feature importance on a fold ensemble: the drop in test AUC
//! when one feature column is shuffled, averaged over repeated shuffles.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::FoldEnsemble;
use crate::learners::LearnerSpec;
use crate::metrics::roc_auc_counts;
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
    /// Mean AUC over the shuffled copies.
    pub shuffled_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub auc_all: f64,
    pub folds: usize,
    pub shuffles: usize,
    pub seed: u64,
    /// In input feature order.
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    pub fn get(&self, feature: &str) -> Option<f64> {
        self.features.iter().find(|f| f.feature == feature).map(|f| f.importance)
    }

    /// `feature,importance` rows, most important first.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["feature", "importance"])?;
        for (name, imp) in rank_features(self, self.features.len()) {
            out.write_record([name, imp.to_string()])?;
        }
        out.flush()
    }
}

/// Trains an `n_folds` ensemble on the training data, then for every feature
/// shuffles that test column `n_shuffles` times. Shuffle `s` uses the same
/// row permutation for every feature.
#[allow(clippy::too_many_arguments)]
pub fn permutation_importance(
    spec: &LearnerSpec,
    feature_names: &[String],
    x_train: ArrayView2<f64>,
    y_train: &[bool],
    x_test: ArrayView2<f64>,
    y_test: &[bool],
    n_folds: usize,
    n_shuffles: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if feature_names.len() != x_train.ncols() || x_test.ncols() != x_train.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature names, {} training columns, {} test columns",
            feature_names.len(),
            x_train.ncols(),
            x_test.ncols()
        )));
    }
    if x_test.nrows() != y_test.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} test rows but {} labels",
            x_test.nrows(),
            y_test.len()
        )));
    }
    if n_shuffles == 0 {
        return Err(Error::InvalidArgument("need at least one shuffle".into()));
    }
    let ensemble = FoldEnsemble::fit(
        spec,
        x_train,
        y_train,
        n_folds,
        derive_seed(seed, "importance-folds"),
        derive_seed(seed, "importance-train"),
    )?;
    let (num_all, den) = roc_auc_counts(&ensemble.predict(x_test)?, y_test).ok_or(Error::OneClass)?;
    let auc_all = num_all as f64 / den as f64;

    let n = x_test.nrows();
    let orders: Vec<Vec<usize>> = (0..n_shuffles)
        .map(|s| {
            let mut idx: Vec<usize> = (0..n).collect();
            SeededRng::derived(seed, &format!("importance-shuffle{s}")).shuffle(&mut idx);
            idx
        })
        .collect();

    let features = (0..feature_names.len())
        .into_par_iter()
        .map(|k| -> Result<FeatureImportance> {
            let mut x: Array2<f64> = x_test.to_owned();
            let original = x_test.column(k);
            // summing exact pair counts keeps an unread feature at exactly 0
            let mut num: u64 = 0;
            for order in &orders {
                for (i, &src) in order.iter().enumerate() {
                    x[[i, k]] = original[src];
                }
                let (c, _) = roc_auc_counts(&ensemble.predict(x.view())?, y_test).ok_or(Error::OneClass)?;
                num += c;
            }
            let shuffled_auc = num as f64 / (den * n_shuffles as u64) as f64;
            Ok(FeatureImportance {
                feature: feature_names[k].clone(),
                importance: auc_all - shuffled_auc,
                shuffled_auc,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ImportanceReport {
        auc_all,
        folds: n_folds,
        shuffles: n_shuffles,
        seed,
        features,
    })
}

/// Descending importance, ties by feature name.
pub fn rank_features(report: &ImportanceReport, top_n: usize) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = report
        .features
        .iter()
        .map(|f| (f.feature.clone(), f.importance))
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(top_n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GbdtParams, Hyperparameters};

    fn report(pairs: &[(&str, f64)]) -> ImportanceReport {
        ImportanceReport {
            auc_all: 0.8,
            folds: 4,
            shuffles: 25,
            seed: 0,
            features: pairs
                .iter()
                .map(|(n, i)| FeatureImportance { feature: n.to_string(), importance: *i, shuffled_auc: 0.8 - i })
                .collect(),
        }
    }

    #[test]
    fn ranking() {
        let r = report(&[("a", 0.1), ("b", 0.3)]);
        assert_eq!(rank_features(&r, 1), vec![("b".to_string(), 0.3)]);
        assert_eq!(rank_features(&r, 9).len(), 2);
        let tied = report(&[("z", 0.2), ("m", 0.2), ("a", 0.2)]);
        let names: Vec<String> = rank_features(&tied, 3).into_iter().map(|p| p.0).collect();
        assert_eq!(names, vec!["a", "m", "z"]);
    }

    #[test]
    fn constant_model_has_zero_importance() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i * (j + 1)) as f64);
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let spec = LearnerSpec::new(Hyperparameters::Gbdt(GbdtParams { n_trees: 0, ..Default::default() }));
        let xt = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let r = permutation_importance(&spec, &["a".into(), "b".into()], x.view(), &y, xt.view(), &[true, false], 4, 25, 1).unwrap();
        assert_eq!(r.auc_all, 0.5);
        assert!(r.features.iter().all(|f| f.importance == 0.0));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "feature,importance\na,0\nb,0\n");
    }
}
