//! Approval-to-publication time lags and a permutation test asking whether
//! the most important features were published unusually soon after approval.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{expect_first_header, headers, reader, MonthDate};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededRng};
use crate::stats::median;

/// Draws per parallel work unit; each chunk owns a derived generator.
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LagTable {
    /// `(compound, feature)` → publication month − approval month.
    pub lags: BTreeMap<(String, String), i32>,
    /// Publication rows skipped for lack of an approval date.
    pub skipped: usize,
}

impl LagTable {
    pub fn features(&self) -> BTreeSet<&str> {
        self.lags.keys().map(|(_, f)| f.as_str()).collect()
    }
}

pub fn compute_time_lags(
    approvals: &HashMap<String, MonthDate>,
    publications: &BTreeMap<(String, String), MonthDate>,
    restrict_to: Option<&BTreeSet<String>>,
) -> LagTable {
    let mut table = LagTable::default();
    for ((compound, feature), &published) in publications {
        if restrict_to.is_some_and(|r| !r.contains(compound)) {
            continue;
        }
        match approvals.get(compound) {
            Some(&approved) => {
                table
                    .lags
                    .insert((compound.clone(), feature.clone()), approved.months_until(published));
            }
            None => table.skipped += 1,
        }
    }
    table
}

pub fn feature_mean_lag(lags: &LagTable, feature: &str) -> Option<f64> {
    let v: Vec<i32> = lags
        .lags
        .iter()
        .filter(|((_, f), _)| f == feature)
        .map(|(_, &l)| l)
        .collect();
    (!v.is_empty()).then(|| v.iter().map(|&l| f64::from(l)).sum::<f64>() / v.len() as f64)
}

/// Mean lag and pair count for every feature with at least one lag.
pub fn feature_mean_lags(lags: &LagTable) -> BTreeMap<String, (f64, usize)> {
    let mut acc: BTreeMap<String, (i64, usize)> = BTreeMap::new();
    for ((_, f), &l) in &lags.lags {
        let e = acc.entry(f.clone()).or_default();
        e.0 += i64::from(l);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(f, (s, n))| (f, (s as f64 / n as f64, n)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageResult {
    pub k: usize,
    pub n_permutations: usize,
    pub seed: u64,
    pub pool_size: usize,
    /// The first `k` ranked features that have lags, with their mean lag.
    pub top_features: Vec<(String, f64)>,
    pub observed_mean_lag: f64,
    /// Draws at or below the observed statistic.
    pub count_at_or_below: usize,
    pub p_value: f64,
    pub null: NullSummary,
    /// Mean lag and pair count of every pool feature.
    pub feature_lags: BTreeMap<String, (f64, usize)>,
}

fn subset_mean(means: &[f64], idx: &mut [usize]) -> f64 {
    idx.sort_unstable();
    idx.iter().map(|&i| means[i]).sum::<f64>() / idx.len() as f64
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Compares the mean of the top-`k` features' mean lags with the same
/// statistic over uniformly drawn `k`-subsets of the pool. Small lags are
/// the alarm, so `p = (1 + #{draw ≤ observed}) / (1 + n_permutations)`.
pub fn top_feature_lag_test(
    lags: &LagTable,
    ranked_features: &[String],
    k: usize,
    n_permutations: usize,
    seed: u64,
) -> Result<LeakageResult> {
    let feature_lags = feature_mean_lags(lags);
    let pool: Vec<&str> = feature_lags.keys().map(String::as_str).collect();
    let means: Vec<f64> = feature_lags.values().map(|v| v.0).collect();
    if k == 0 || k > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} but the pool holds {} features with lags",
            pool.len()
        )));
    }
    if n_permutations == 0 {
        return Err(Error::InvalidArgument("need at least one permutation".into()));
    }
    let position: HashMap<&str, usize> = pool.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut seen = BTreeSet::new();
    let mut top: Vec<usize> = ranked_features
        .iter()
        .filter_map(|f| position.get(f.as_str()).copied())
        .filter(|&i| seen.insert(i))
        .take(k)
        .collect();
    if top.len() < k {
        return Err(Error::InvalidArgument(format!(
            "only {} ranked features have lags, need {k}",
            top.len()
        )));
    }
    let top_features = top.iter().map(|&i| (pool[i].to_string(), means[i])).collect();
    let observed = subset_mean(&means, &mut top);
    let cutoff = observed + 1e-9 * observed.abs().max(1.0);

    let n_chunks = n_permutations.div_ceil(CHUNK);
    let draws: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = SeededRng::new(derive_seed(seed, &format!("lag-chunk{c}")));
            let n = CHUNK.min(n_permutations - c * CHUNK);
            let means = &means;
            let pool_len = pool.len();
            (0..n).map(move |_| subset_mean(means, &mut rng.sample_indices(pool_len, k)))
        })
        .collect();
    let count = draws.iter().filter(|&&d| d <= cutoff).count();

    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    let null = NullSummary {
        mean,
        sd,
        min: sorted[0],
        q05: quantile(&sorted, 0.05),
        median: median(&sorted).expect("non-empty"),
        q95: quantile(&sorted, 0.95),
        max: sorted[sorted.len() - 1],
    };

    Ok(LeakageResult {
        k,
        n_permutations,
        seed,
        pool_size: pool.len(),
        top_features,
        observed_mean_lag: observed,
        count_at_or_below: count,
        p_value: (1 + count) as f64 / (1 + n_permutations) as f64,
        null,
        feature_lags,
    })
}

/// Loads `compound_id, approval_date`.
pub fn load_approvals(path: impl AsRef<Path>) -> Result<HashMap<String, MonthDate>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let h = headers(path, &mut rdr)?;
    expect_first_header(path, &h, "compound_id")?;
    if h.len() != 2 {
        return Err(Error::format(path, "expected columns compound_id, approval_date"));
    }
    let mut out = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = rec[0].trim().to_string();
        let cell = rec.get(1).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let date: MonthDate = cell
            .parse()
            .map_err(|e: Error| Error::format(path, format!("line {}: {e}", row + 2)))?;
        if out.insert(id.clone(), date).is_some() {
            return Err(Error::DuplicateCompound(id));
        }
    }
    Ok(out)
}

/// Loads `compound_id, feature_id, first_pub_date`. Repeated pairs keep the
/// earliest date.
pub fn load_publications(path: impl AsRef<Path>) -> Result<BTreeMap<(String, String), MonthDate>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let h = headers(path, &mut rdr)?;
    expect_first_header(path, &h, "compound_id")?;
    if h.len() != 3 {
        return Err(Error::format(
            path,
            "expected columns compound_id, feature_id, first_pub_date",
        ));
    }
    let mut out: BTreeMap<(String, String), MonthDate> = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let cell = rec.get(2).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let date: MonthDate = cell
            .parse()
            .map_err(|e: Error| Error::format(path, format!("line {}: {e}", row + 2)))?;
        out.entry((rec[0].trim().to_string(), rec[1].trim().to_string()))
            .and_modify(|d| *d = (*d).min(date))
            .or_insert(date);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> MonthDate {
        s.parse().unwrap()
    }

    fn table(entries: &[(&str, &str, i32)]) -> LagTable {
        LagTable {
            lags: entries
                .iter()
                .map(|(c, f, l)| ((c.to_string(), f.to_string()), *l))
                .collect(),
            skipped: 0,
        }
    }

    #[test]
    fn lag_examples() {
        let approvals: HashMap<String, MonthDate> =
            [("a".to_string(), d("2000-01")), ("b".to_string(), d("2004-06"))].into();
        let pubs: BTreeMap<(String, String), MonthDate> = [
            (("a".to_string(), "p".to_string()), d("2003-01")),
            (("b".to_string(), "p".to_string()), d("2003-06")),
            (("b".to_string(), "q".to_string()), d("2004-06")),
            (("c".to_string(), "q".to_string()), d("2004-06")),
        ]
        .into();
        let t = compute_time_lags(&approvals, &pubs, None);
        assert_eq!(t.lags[&("a".to_string(), "p".to_string())], 36);
        assert_eq!(t.lags[&("b".to_string(), "p".to_string())], -12);
        assert_eq!(t.lags[&("b".to_string(), "q".to_string())], 0);
        assert_eq!(t.skipped, 1);
        let only_b: BTreeSet<String> = ["b".to_string()].into();
        assert_eq!(compute_time_lags(&approvals, &pubs, Some(&only_b)).lags.len(), 2);
    }

    #[test]
    fn mean_lag_examples() {
        let t = table(&[("a", "f", 12), ("b", "f", 24), ("a", "g", 7)]);
        assert_eq!(feature_mean_lag(&t, "f"), Some(18.0));
        assert_eq!(feature_mean_lag(&t, "g"), Some(7.0));
        assert_eq!(feature_mean_lag(&t, "h"), None);
    }

    #[test]
    fn whole_pool_and_flat_null_give_one() {
        let t = table(&[("a", "f", 1), ("a", "g", 10), ("a", "h", 10)]);
        let ranked: Vec<String> = ["f", "g", "h"].iter().map(|s| s.to_string()).collect();
        assert_eq!(top_feature_lag_test(&t, &ranked, 3, 500, 1).unwrap().p_value, 1.0);
        let flat = table(&[("a", "f", 5), ("a", "g", 5), ("a", "h", 5)]);
        assert_eq!(top_feature_lag_test(&flat, &ranked, 2, 500, 1).unwrap().p_value, 1.0);
        assert!(top_feature_lag_test(&t, &ranked, 4, 500, 1).is_err());
    }

    #[test]
    fn three_feature_toy_is_near_one_third() {
        let t = table(&[("a", "f", 1), ("a", "g", 10), ("a", "h", 10)]);
        let ranked: Vec<String> = vec!["f".into()];
        let r = top_feature_lag_test(&t, &ranked, 1, 30_000, 8).unwrap();
        assert!((r.p_value - 1.0 / 3.0).abs() < 0.01, "{}", r.p_value);
        assert_eq!(r, top_feature_lag_test(&t, &ranked, 1, 30_000, 8).unwrap());
    }
}
