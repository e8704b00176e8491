use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::RunRecord;
use crate::error::Result;
use crate::metrics::Metric;
use crate::split::SplitMethod;
use crate::stats::{median, paired_t_test_one_sided, stouffer_combine, Alternative, TTestResult};

/// Repetition summary of one cell under one split method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub n_records: usize,
    pub n_failed: usize,
    /// Records scored but with an undefined ROC AUC (single-class test set).
    pub n_undefined: usize,
    /// Mean over repetitions where the metric is defined.
    pub means: BTreeMap<String, Option<f64>>,
    /// ROC AUC per repetition, in repetition order.
    pub per_repetition_roc_auc: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparison {
    pub dataset: String,
    pub learner: String,
    pub target: String,
    pub protein: bool,
    pub random: Option<MethodSummary>,
    pub time: Option<MethodSummary>,
    /// Random minus time, per metric.
    pub differences: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTest {
    pub target: String,
    pub metric: String,
    pub n_cells: usize,
    pub median_difference: Option<f64>,
    pub test: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedTest {
    pub metric: String,
    pub p_value: Option<f64>,
    pub n_targets: usize,
    /// Targets left out: fewer than two cells, or a degenerate p of 0 or 1.
    pub excluded_targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub metric: String,
    pub protein: Vec<f64>,
    pub other: Vec<f64>,
    pub protein_median: Option<f64>,
    pub other_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cells: Vec<CellComparison>,
    pub target_tests: Vec<TargetTest>,
    pub combined: Vec<CombinedTest>,
    pub partitions: Vec<Partition>,
    /// Cells lacking one of the two split methods.
    pub incomplete: Vec<String>,
    pub undefined_records: usize,
    pub failed_records: usize,
}

fn summarize(records: &[&RunRecord]) -> MethodSummary {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.repetition);
    let means = Metric::ALL
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = sorted.iter().filter_map(|r| r.metrics.and_then(|s| s.get(m))).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (m.name().to_string(), mean)
        })
        .collect();
    MethodSummary {
        n_records: sorted.len(),
        n_failed: sorted.iter().filter(|r| r.metrics.is_none()).count(),
        n_undefined: sorted
            .iter()
            .filter(|r| r.metrics.is_some_and(|m| m.roc_auc.is_none()))
            .count(),
        means,
        per_repetition_roc_auc: sorted.iter().map(|r| r.metrics.and_then(|m| m.roc_auc)).collect(),
    }
}

/// Per-cell repetition means, random − time differences, a one-sided paired
/// t-test per target (random > time) and Stouffer's combination across
/// targets, for every metric. Datasets named in `protein_datasets` form one
/// side of the partition.
pub fn build_comparison_report(records: &[RunRecord], protein_datasets: &BTreeSet<String>) -> Result<ComparisonReport> {
    type Key = (String, String, String);
    let mut groups: BTreeMap<Key, BTreeMap<SplitMethod, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.learner.clone(), r.target.clone()))
            .or_default()
            .entry(r.split.method)
            .or_default()
            .push(r);
    }

    let mut cells = Vec::new();
    let mut incomplete = Vec::new();
    for ((dataset, learner, target), by_method) in groups {
        let random = by_method.get(&SplitMethod::Random).map(|v| summarize(v));
        let time = by_method.get(&SplitMethod::Time).map(|v| summarize(v));
        if random.is_none() || time.is_none() {
            incomplete.push(format!("{dataset}|{learner}|{target}"));
        }
        let differences = Metric::ALL
            .iter()
            .map(|&m| {
                let name = m.name();
                let d = match (&random, &time) {
                    (Some(a), Some(b)) => match (a.means[name], b.means[name]) {
                        (Some(x), Some(y)) => Some(x - y),
                        _ => None,
                    },
                    _ => None,
                };
                (name.to_string(), d)
            })
            .collect();
        cells.push(CellComparison {
            protein: protein_datasets.contains(&dataset),
            dataset,
            learner,
            target,
            random,
            time,
            differences,
        });
    }

    let targets: BTreeSet<&str> = cells.iter().map(|c| c.target.as_str()).collect();
    let mut target_tests = Vec::new();
    let mut combined = Vec::new();
    let mut partitions = Vec::new();
    for metric in Metric::ALL {
        let name = metric.name();
        let mut ps = Vec::new();
        let mut excluded = Vec::new();
        for &target in &targets {
            let (a, b): (Vec<f64>, Vec<f64>) = cells
                .iter()
                .filter(|c| c.target == target && c.differences[name].is_some())
                .map(|c| {
                    let r = c.random.as_ref().expect("complete")
                        .means[name].expect("defined");
                    let t = c.time.as_ref().expect("complete").means[name].expect("defined");
                    (r, t)
                })
                .unzip();
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let test = if a.len() >= 2 {
                Some(paired_t_test_one_sided(&a, &b, Alternative::AGreater)?)
            } else {
                None
            };
            match test {
                Some(t) if t.p_value > 0.0 && t.p_value < 1.0 => ps.push(t.p_value),
                _ => excluded.push(target.to_string()),
            }
            target_tests.push(TargetTest {
                target: target.to_string(),
                metric: name.to_string(),
                n_cells: a.len(),
                median_difference: median(&diffs),
                test,
            });
        }
        combined.push(CombinedTest {
            metric: name.to_string(),
            p_value: if ps.is_empty() { None } else { Some(stouffer_combine(&ps)?) },
            n_targets: ps.len(),
            excluded_targets: excluded,
        });
        let (mut protein, mut other) = (Vec::new(), Vec::new());
        for c in &cells {
            if let Some(d) = c.differences[name] {
                if c.protein {
                    protein.push(d);
                } else {
                    other.push(d);
                }
            }
        }
        partitions.push(Partition {
            metric: name.to_string(),
            protein_median: median(&protein),
            other_median: median(&other),
            protein,
            other,
        });
    }

    Ok(ComparisonReport {
        cells,
        target_tests,
        combined,
        partitions,
        incomplete,
        undefined_records: records
            .iter()
            .filter(|r| r.metrics.is_some_and(|m| m.roc_auc.is_none()))
            .count(),
        failed_records: records.iter().filter(|r| r.metrics.is_none()).count(),
    })
}

impl ComparisonReport {
    pub fn combined_p(&self, metric: Metric) -> Option<f64> {
        self.combined.iter().find(|c| c.metric == metric.name()).and_then(|c| c.p_value)
    }

    pub fn target_test(&self, target: &str, metric: Metric) -> Option<&TargetTest> {
        self.target_tests
            .iter()
            .find(|t| t.target == target && t.metric == metric.name())
    }

    /// One row per cell: identifiers, then random, time and difference
    /// columns for each metric. Undefined values are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["dataset".to_string(), "learner".into(), "target".into(), "protein".into()];
        for m in Metric::ALL {
            for side in ["random", "time", "difference"] {
                header.push(format!("{side}_{}", m.name()));
            }
        }
        header.extend(["random_undefined".into(), "time_undefined".into()]);
        out.write_record(&header)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let mut row = vec![c.dataset.clone(), c.learner.clone(), c.target.clone(), c.protein.to_string()];
            for m in Metric::ALL {
                let n = m.name();
                row.push(fmt(c.random.as_ref().and_then(|s| s.means[n])));
                row.push(fmt(c.time.as_ref().and_then(|s| s.means[n])));
                row.push(fmt(c.differences[n]));
            }
            let und = |s: &Option<MethodSummary>| s.as_ref().map(|s| s.n_undefined.to_string()).unwrap_or_default();
            row.push(und(&c.random));
            row.push(und(&c.time));
            out.write_record(&row)?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::grid::SplitDescriptor;
    use crate::learners::LearnerKind;
    use crate::metrics::MetricSet;

    fn record(dataset: &str, target: &str, method: SplitMethod, rep: usize, auc: Option<f64>) -> RunRecord {
        RunRecord {
            dataset: dataset.into(),
            learner: "nb".into(),
            learner_kind: LearnerKind::NaiveBayes,
            target: target.into(),
            split: SplitDescriptor { method, threshold: None, split_seed: None, fixed_test_positive_count: None, n_train: 3, n_test: 2 },
            repetition: rep,
            splitting_seed: 0,
            training_seed: 0,
            metrics: Some(MetricSet { accuracy: 0.5, f1: 0.5, mcc: 0.0, roc_auc: auc, pr_auc: auc }),
            error: None,
            test_ids: vec![],
            test_labels: vec![],
            probabilities: vec![],
        }
    }

    #[test]
    fn identical_methods_give_half() {
        let mut recs = Vec::new();
        for (d, auc) in [("a", 0.7), ("b", 0.6), ("c", 0.9)] {
            for t in ["t1", "t2"] {
                for m in [SplitMethod::Time, SplitMethod::Random] {
                    recs.push(record(d, t, m, 0, Some(auc)));
                }
            }
        }
        let rep = build_comparison_report(&recs, &BTreeSet::new()).unwrap();
        assert_eq!(rep.cells.len(), 6);
        assert!(rep.cells.iter().all(|c| c.differences.values().all(|d| *d == Some(0.0))));
        for t in &rep.target_tests {
            assert_eq!(t.test.unwrap().p_value, 0.5);
        }
        assert_eq!(rep.combined_p(Metric::RocAuc), Some(0.5));
    }

    #[test]
    fn differences_tests_and_partition() {
        let mut recs = Vec::new();
        for (i, d) in ["a", "b", "c"].iter().enumerate() {
            for rep in 0..2 {
                recs.push(record(d, "t", SplitMethod::Time, rep, Some(0.6)));
                recs.push(record(d, "t", SplitMethod::Random, rep, Some(0.6 + 0.01 * (i + 1) as f64 + 0.01 * rep as f64)));
            }
        }
        recs.push(record("a", "t", SplitMethod::Random, 2, None));
        recs.push(record("z", "t", SplitMethod::Time, 0, Some(0.5)));
        let protein: BTreeSet<String> = ["a".to_string()].into();
        let rep = build_comparison_report(&recs, &protein).unwrap();
        assert_eq!(rep.incomplete, vec!["z|nb|t"]);
        assert_eq!(rep.undefined_records, 1);
        let a = &rep.cells[0];
        assert!((a.differences["roc_auc"].unwrap() - 0.015).abs() < 1e-12);
        assert_eq!(a.random.as_ref().unwrap().n_undefined, 1);
        let t = rep.target_test("t", Metric::RocAuc).unwrap();
        assert_eq!(t.n_cells, 3);
        // differences 0.015, 0.025, 0.035: t = 0.025 / (0.01 / √3)
        let tt = t.test.unwrap();
        assert!((tt.t.unwrap() - 0.025 / (0.01 / 3f64.sqrt())).abs() < 1e-6);
        assert!(tt.p_value < 0.05);
        let part = rep.partitions.iter().find(|p| p.metric == "roc_auc").unwrap();
        assert_eq!(part.protein.len(), 1);
        assert_eq!(part.other.len(), 2);
        // accuracy is equal on both sides everywhere
        assert_eq!(rep.combined_p(Metric::Accuracy), Some(0.5));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("dataset,learner,target,protein,random_roc_auc,time_roc_auc,difference_roc_auc"));
    }
}
