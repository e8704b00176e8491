//! Unsupervised feature filtering: exact duplicate columns, then near-constant
//! columns by coefficient of variation, then one member of each highly
//! correlated pair. The leftmost column always survives.

use std::collections::HashMap;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

pub const DEFAULT_CV_THRESHOLD: f64 = 0.05;
pub const DEFAULT_R2_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub dropped_duplicates: Vec<String>,
    pub dropped_low_cv: Vec<String>,
    /// `(kept, dropped)` pairs.
    pub dropped_correlated: Vec<(String, String)>,
    pub kept: Vec<String>,
}

fn bits_key(col: ArrayView1<f64>) -> Vec<u64> {
    // all NaNs hash alike; -0.0 and 0.0 compare equal
    col.iter()
        .map(|v| {
            if v.is_nan() {
                u64::MAX
            } else if *v == 0.0 {
                0
            } else {
                v.to_bits()
            }
        })
        .collect()
}

/// Drops every column whose value vector (missing-aware) equals an earlier one.
pub fn drop_duplicate_features(t: &FeatureTable) -> (FeatureTable, Vec<String>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (j, col) in t.values.columns().into_iter().enumerate() {
        let key = bits_key(col);
        if seen.contains_key(&key) {
            dropped.push(t.feature_names[j].clone());
        } else {
            seen.insert(key, j);
            keep.push(j);
        }
    }
    (t.select_columns(&keep), dropped)
}

/// Population mean and standard deviation over non-missing entries.
fn mean_sd(col: ArrayView1<f64>) -> Option<(f64, f64)> {
    let vals: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
    if vals.is_empty() {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Coefficient of variation `sd / |mean|`; infinite for a zero mean with
/// positive spread, `None` for an all-missing column.
pub fn coefficient_of_variation(col: ArrayView1<f64>) -> Option<f64> {
    let (mean, sd) = mean_sd(col)?;
    if sd == 0.0 {
        Some(0.0)
    } else if mean == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(sd / mean.abs())
    }
}

pub fn drop_low_cv_features(t: &FeatureTable, threshold: f64) -> Result<(FeatureTable, Vec<String>)> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "CV threshold must be non-negative, got {threshold}"
        )));
    }
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (j, col) in t.values.columns().into_iter().enumerate() {
        match coefficient_of_variation(col) {
            Some(cv) if cv >= threshold && cv > 0.0 => keep.push(j),
            _ => dropped.push(t.feature_names[j].clone()),
        }
    }
    Ok((t.select_columns(&keep), dropped))
}

/// Pearson r over rows where both entries are present; `None` with fewer than
/// three such rows or zero variance on either side.
pub fn pairwise_pearson(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b.iter())
        .filter(|(x, y)| !x.is_nan() && !y.is_nan())
        .map(|(&x, &y)| (x, y))
        .collect();
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn drop_correlated_features(
    t: &FeatureTable,
    r2_threshold: f64,
) -> Result<(FeatureTable, Vec<(String, String)>)> {
    if !(0.0..=1.0).contains(&r2_threshold) {
        return Err(Error::InvalidArgument(format!(
            "r² threshold must lie in [0, 1], got {r2_threshold}"
        )));
    }
    let p = t.n_features();
    let mut dropped = vec![false; p];
    let mut pairs = Vec::new();
    for i in 0..p {
        if dropped[i] {
            continue;
        }
        for j in (i + 1)..p {
            if dropped[j] {
                continue;
            }
            if let Some(r) = pairwise_pearson(t.values.column(i), t.values.column(j)) {
                if r * r > r2_threshold {
                    dropped[j] = true;
                    pairs.push((t.feature_names[i].clone(), t.feature_names[j].clone()));
                }
            }
        }
    }
    let keep: Vec<usize> = (0..p).filter(|&j| !dropped[j]).collect();
    Ok((t.select_columns(&keep), pairs))
}

/// Duplicates, then CV, then correlation.
pub fn apply_filter_pipeline(
    t: &FeatureTable,
    cv_threshold: f64,
    r2_threshold: f64,
) -> Result<(FeatureTable, FilterReport)> {
    let (t1, dropped_duplicates) = drop_duplicate_features(t);
    let (t2, dropped_low_cv) = drop_low_cv_features(&t1, cv_threshold)?;
    let (t3, dropped_correlated) = drop_correlated_features(&t2, r2_threshold)?;
    if t3.n_features() == 0 {
        return Err(Error::AllFeaturesFiltered);
    }
    let report = FilterReport {
        dropped_duplicates,
        dropped_low_cv,
        dropped_correlated,
        kept: t3.feature_names.clone(),
    };
    Ok((t3, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn tbl(values: Array2<f64>) -> FeatureTable {
        let (n, p) = values.dim();
        FeatureTable::new(
            "d",
            (0..n).map(|i| format!("c{i}")).collect(),
            (0..p).map(|j| format!("f{}", j + 1)).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn duplicates_keep_leftmost() {
        let (t, d) = drop_duplicate_features(&tbl(array![[1.0, 1.0, 3.0], [2.0, 2.0, 4.0]]));
        assert_eq!(t.feature_names, vec!["f1", "f3"]);
        assert_eq!(d, vec!["f2"]);

        let nan = f64::NAN;
        let (_, d) = drop_duplicate_features(&tbl(array![[1.0, 1.0], [nan, nan]]));
        assert_eq!(d, vec!["f2"]);

        let (t, d) = drop_duplicate_features(&tbl(array![[1.0, 2.0], [3.0, 4.0]]));
        assert!(d.is_empty());
        assert_eq!(t.n_features(), 2);
    }

    #[test]
    fn cv_examples() {
        let t = tbl(array![[5.0, 1.0, 100.0, -1.0], [5.0, 2.0, 100.1, 1.0], [5.0, 3.0, 99.9, 0.0]]);
        let cv = coefficient_of_variation(t.values.column(1)).unwrap();
        // population sd of [1,2,3] is sqrt(2/3); mean 2
        assert!((cv - (2.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        let cv3 = coefficient_of_variation(t.values.column(2)).unwrap();
        let sd3 = ((0.0f64.powi(2) + 0.1f64.powi(2) + 0.1f64.powi(2)) / 3.0).sqrt();
        assert!((cv3 - sd3 / 100.0).abs() < 1e-9, "{cv3}");
        let (kept, dropped) = drop_low_cv_features(&t, 0.05).unwrap();
        assert_eq!(kept.feature_names, vec!["f2", "f4"]);
        assert_eq!(dropped, vec!["f1", "f3"]);
    }

    #[test]
    fn correlation_examples() {
        let t = tbl(array![[1.0, 2.0, 3.0], [2.0, 4.0, 1.0], [3.0, 6.0, 2.0]]);
        assert!((pairwise_pearson(t.values.column(0), t.values.column(2)).unwrap() + 0.5).abs() < 1e-15);
        let (kept, pairs) = drop_correlated_features(&t, 0.85).unwrap();
        assert_eq!(kept.feature_names, vec!["f1", "f3"]);
        assert_eq!(pairs, vec![("f1".to_string(), "f2".to_string())]);

        let orth = tbl(array![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]);
        assert_eq!(pairwise_pearson(orth.values.column(0), orth.values.column(1)), Some(0.0));
        assert_eq!(drop_correlated_features(&orth, 0.85).unwrap().0.n_features(), 2);
    }

    #[test]
    fn pipeline_errors_when_everything_goes() {
        let t = tbl(array![[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]]);
        assert!(matches!(
            apply_filter_pipeline(&t, 0.05, 0.85),
            Err(Error::AllFeaturesFiltered)
        ));
    }

    #[test]
    fn pipeline_identity_on_clean_table() {
        let t = tbl(array![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [0.5, 0.0]]);
        let (out, report) = apply_filter_pipeline(&t, 0.05, 0.85).unwrap();
        assert_eq!(out, t);
        assert!(report.dropped_duplicates.is_empty());
        assert!(report.dropped_low_cv.is_empty());
        assert!(report.dropped_correlated.is_empty());
    }
}
