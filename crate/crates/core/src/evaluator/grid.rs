use std::collections::{BTreeMap, HashMap};

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{mean_of_vectors, train_fold_ensemble};
use crate::data::{FeatureTable, LabelTable, MonthDate};
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, LearnerSpec};
use crate::metrics::{compute_metrics, MetricSet};
use crate::rng::derive_seed;
use crate::split::{SplitMethod, SplitPlan};

/// Dataset name given to cross-dataset ensemble records.
pub const ENSEMBLE_DATASET: &str = "ensemble";

#[derive(Debug, Clone)]
pub struct GridDataset {
    pub name: String,
    pub table: FeatureTable,
}

/// The split plans used by one split method across repetitions. A single
/// plan is reused by every repetition; otherwise repetition `r` takes plan
/// `r`. Targets may carry their own plans (fixed positive count).
#[derive(Debug, Clone)]
pub struct SplitSchedule {
    pub method: SplitMethod,
    pub plans: Vec<SplitPlan>,
    pub per_target: BTreeMap<String, Vec<SplitPlan>>,
}

impl SplitSchedule {
    pub fn fixed(plan: SplitPlan) -> Self {
        SplitSchedule {
            method: plan.method,
            plans: vec![plan],
            per_target: BTreeMap::new(),
        }
    }

    pub fn per_repetition(method: SplitMethod, plans: Vec<SplitPlan>) -> Self {
        SplitSchedule {
            method,
            plans,
            per_target: BTreeMap::new(),
        }
    }

    pub fn plan(&self, target: &str, repetition: usize) -> &SplitPlan {
        let plans = self.per_target.get(target).unwrap_or(&self.plans);
        &plans[if plans.len() == 1 { 0 } else { repetition }]
    }

    fn check(&self, n_repetitions: usize) -> Result<()> {
        for plans in std::iter::once(&self.plans).chain(self.per_target.values()) {
            if plans.len() != 1 && plans.len() < n_repetitions {
                return Err(Error::InvalidArgument(format!(
                    "{} split schedule has {} plans for {n_repetitions} repetitions",
                    self.method,
                    plans.len()
                )));
            }
            if plans.iter().any(|p| p.method != self.method) {
                return Err(Error::InvalidArgument(format!(
                    "{} split schedule contains a plan of another method",
                    self.method
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub learners: Vec<LearnerSpec>,
    pub targets: Vec<String>,
    pub schedules: Vec<SplitSchedule>,
    pub n_repetitions: usize,
    pub inner_folds: usize,
    pub threshold: f64,
    pub base_seed: u64,
    /// Also emit records averaging every dataset's probabilities.
    pub ensemble_across: bool,
}

impl GridSpec {
    pub fn new(learners: Vec<LearnerSpec>, targets: Vec<String>, schedules: Vec<SplitSchedule>, base_seed: u64) -> Self {
        GridSpec {
            learners,
            targets,
            schedules,
            n_repetitions: 20,
            inner_folds: 5,
            threshold: 0.5,
            base_seed,
            ensemble_across: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub method: SplitMethod,
    pub threshold: Option<MonthDate>,
    pub split_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_test_positive_count: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
}

/// One trained-and-scored grid cell repetition. Ensemble records carry the
/// seeds of their first member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub learner: String,
    pub learner_kind: LearnerKind,
    pub target: String,
    pub split: SplitDescriptor,
    pub repetition: usize,
    pub splitting_seed: u64,
    pub training_seed: u64,
    pub metrics: Option<MetricSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub test_ids: Vec<String>,
    pub test_labels: Vec<bool>,
    pub probabilities: Vec<f64>,
}

impl RunRecord {
    pub fn cell_id(&self) -> String {
        format!("{}|{}|{}|{}", self.dataset, self.learner, self.target, self.split.method)
    }
}

struct Task<'a> {
    dataset: &'a GridDataset,
    learner: &'a LearnerSpec,
    target: usize,
    schedule: &'a SplitSchedule,
    repetition: usize,
}

fn labelled(ids: &[String], rows: &HashMap<&str, usize>, y: &[Option<bool>]) -> (Vec<String>, Vec<bool>) {
    ids.iter()
        .filter_map(|id| rows.get(id.as_str()).and_then(|&r| y[r]).map(|l| (id.clone(), l)))
        .unzip()
}

fn run_task(task: &Task, labels: &LabelTable, label_rows: &HashMap<&str, usize>, spec: &GridSpec) -> RunRecord {
    let target = &labels.target_names[task.target];
    let plan = task.schedule.plan(target, task.repetition);
    let learner = task.learner.label();
    let cell = format!("{}|{}|{}|{}", task.dataset.name, learner, target, task.schedule.method);
    let splitting_seed = derive_seed(spec.base_seed, &format!("{cell}|rep{}|split", task.repetition));
    let training_seed = derive_seed(spec.base_seed, &format!("{cell}|rep{}|train", task.repetition));
    let y = labels.target(task.target);
    let (train_ids, y_train) = labelled(&plan.train_ids, label_rows, &y);
    let (test_ids, y_test) = labelled(&plan.test_ids, label_rows, &y);

    let mut record = RunRecord {
        dataset: task.dataset.name.clone(),
        learner,
        learner_kind: task.learner.kind(),
        target: target.clone(),
        split: SplitDescriptor {
            method: plan.method,
            threshold: plan.threshold,
            split_seed: plan.seed,
            fixed_test_positive_count: plan.fixed_test_positive_count,
            n_train: train_ids.len(),
            n_test: test_ids.len(),
        },
        repetition: task.repetition,
        splitting_seed,
        training_seed,
        metrics: None,
        error: None,
        test_ids,
        test_labels: y_test,
        probabilities: Vec::new(),
    };

    let outcome = (|| -> Result<(Vec<f64>, MetricSet)> {
        let table = &task.dataset.table;
        let rows = table.row_index();
        let lookup = |ids: &[String]| -> Result<Vec<usize>> {
            ids.iter()
                .map(|id| {
                    rows.get(id.as_str()).copied().ok_or_else(|| {
                        Error::Split(format!("compound {id:?} missing from dataset {:?}", table.dataset_name))
                    })
                })
                .collect()
        };
        let x_train = table.values.select(Axis(0), &lookup(&train_ids)?);
        let x_test = table.values.select(Axis(0), &lookup(&record.test_ids)?);
        let probs = train_fold_ensemble(
            task.learner,
            x_train.view(),
            &y_train,
            x_test.view(),
            spec.inner_folds,
            splitting_seed,
            training_seed,
        )?;
        let metrics = compute_metrics(&probs, &record.test_labels, spec.threshold)?;
        Ok((probs, metrics))
    })();
    match outcome {
        Ok((probs, metrics)) => {
            record.probabilities = probs;
            record.metrics = Some(metrics);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every dataset × learner × target × schedule × repetition cell.
/// Cells run in parallel on the current rayon pool; the output order is
/// fixed by the nesting order above. Cell failures are recorded, not raised.
pub fn run_grid(datasets: &[GridDataset], labels: &LabelTable, spec: &GridSpec) -> Result<Vec<RunRecord>> {
    for l in &spec.learners {
        l.validate()?;
    }
    let mut methods: Vec<SplitMethod> = spec.schedules.iter().map(|s| s.method).collect();
    methods.sort();
    if methods.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("at most one split schedule per method".into()));
    }
    for s in &spec.schedules {
        s.check(spec.n_repetitions)?;
    }
    let targets = spec
        .targets
        .iter()
        .map(|t| {
            labels
                .target_index(t)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown target {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) || (spec.ensemble_across && names.contains(&ENSEMBLE_DATASET)) {
        return Err(Error::InvalidArgument("dataset names must be unique".into()));
    }

    let mut tasks = Vec::new();
    for dataset in datasets {
        for learner in &spec.learners {
            for &target in &targets {
                for schedule in &spec.schedules {
                    for repetition in 0..spec.n_repetitions {
                        tasks.push(Task { dataset, learner, target, schedule, repetition });
                    }
                }
            }
        }
    }
    let label_rows: HashMap<&str, usize> = labels
        .compound_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut records: Vec<RunRecord> = tasks
        .par_iter()
        .map(|t| run_task(t, labels, &label_rows, spec))
        .collect();

    if spec.ensemble_across && datasets.len() > 1 {
        let per_dataset = tasks.len() / datasets.len();
        for i in 0..per_dataset {
            let members: Vec<&RunRecord> = (0..datasets.len()).map(|d| &records[d * per_dataset + i]).collect();
            records.push(ensemble_record(&members, spec.threshold));
        }
    }
    Ok(records)
}

fn ensemble_record(members: &[&RunRecord], threshold: f64) -> RunRecord {
    let first = members[0];
    let mut record = RunRecord {
        dataset: ENSEMBLE_DATASET.to_string(),
        metrics: None,
        error: None,
        probabilities: Vec::new(),
        ..first.clone()
    };
    let outcome = (|| -> Result<(Vec<f64>, MetricSet)> {
        if let Some(m) = members.iter().find(|m| m.error.is_some()) {
            return Err(Error::InvalidArgument(format!("member dataset {:?} failed", m.dataset)));
        }
        if members.iter().any(|m| m.test_ids != first.test_ids) {
            return Err(Error::ShapeMismatch("member datasets scored different test compounds".into()));
        }
        let vectors: Vec<Vec<f64>> = members.iter().map(|m| m.probabilities.clone()).collect();
        let probs = mean_of_vectors(&vectors)?;
        let metrics = compute_metrics(&probs, &first.test_labels, threshold)?;
        Ok((probs, metrics))
    })();
    match outcome {
        Ok((probs, metrics)) => {
            record.probabilities = probs;
            record.metrics = Some(metrics);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::split::SplitPlan;
    use ndarray::Array2;

    fn setup(n: usize) -> (GridDataset, LabelTable, Vec<String>) {
        let ids: Vec<String> = (0..n).map(|i| format!("c{i:03}")).collect();
        let mut rng = SeededRng::new(3);
        let x = Array2::from_shape_fn((n, 2), |_| rng.normal());
        let y = Array2::from_shape_fn((n, 1), |(i, _)| Some(x[[i, 0]] + 0.5 * rng.normal() > 0.0));
        let table = FeatureTable::new("d", ids.clone(), vec!["a".into(), "b".into()], x).unwrap();
        let labels = LabelTable::new(ids.clone(), vec!["t".into()], y).unwrap();
        (GridDataset { name: "d".into(), table }, labels, ids)
    }

    fn plan(method: SplitMethod, ids: &[String], seed: u64) -> SplitPlan {
        let mut idx: Vec<usize> = (0..ids.len()).collect();
        SeededRng::new(seed).shuffle(&mut idx);
        let cut = ids.len() * 3 / 4;
        let mut train: Vec<String> = idx[..cut].iter().map(|&i| ids[i].clone()).collect();
        let mut test: Vec<String> = idx[cut..].iter().map(|&i| ids[i].clone()).collect();
        train.sort();
        test.sort();
        SplitPlan { method, threshold: None, seed: Some(seed), train_ids: train, test_ids: test, fixed_test_positive_count: None }
    }

    #[test]
    fn product_count_and_determinism() {
        let (d, labels, ids) = setup(80);
        let schedules = vec![
            SplitSchedule::fixed(plan(SplitMethod::Time, &ids, 100)),
            SplitSchedule::per_repetition(SplitMethod::Random, (0..3).map(|i| plan(SplitMethod::Random, &ids, i)).collect()),
        ];
        let mut spec = GridSpec::new(vec![LearnerSpec::naive_bayes()], vec!["t".into()], schedules, 11);
        spec.n_repetitions = 3;
        let records = run_grid(&[d.clone()], &labels, &spec).unwrap();
        assert_eq!(records.len(), 6);
        assert!(records.iter().all(|r| r.error.is_none() && r.probabilities.len() == r.test_ids.len()));
        let again = run_grid(&[d.clone()], &labels, &spec).unwrap();
        assert_eq!(serde_json::to_string(&records).unwrap(), serde_json::to_string(&again).unwrap());

        spec.targets.clear();
        assert!(run_grid(&[d], &labels, &spec).unwrap().is_empty());
    }

    #[test]
    fn failures_are_recorded() {
        let (d, mut labels, ids) = setup(40);
        // a target that is all negative cannot be fitted
        labels.values.fill(Some(false));
        let spec = GridSpec {
            n_repetitions: 1,
            ..GridSpec::new(vec![LearnerSpec::naive_bayes()], vec!["t".into()], vec![SplitSchedule::fixed(plan(SplitMethod::Time, &ids, 1))], 0)
        };
        let records = run_grid(&[d], &labels, &spec).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].error.is_some() && records[0].metrics.is_none());
    }

    #[test]
    fn ensemble_records_average_members() {
        let (d, labels, ids) = setup(80);
        let mut d2 = d.clone();
        d2.name = "e".into();
        d2.table.values.mapv_inplace(|v| v * 2.0 + 1.0);
        let mut spec = GridSpec::new(vec![LearnerSpec::elastic_net()], vec!["t".into()], vec![SplitSchedule::fixed(plan(SplitMethod::Time, &ids, 5))], 2);
        spec.n_repetitions = 2;
        spec.ensemble_across = true;
        let records = run_grid(&[d, d2], &labels, &spec).unwrap();
        assert_eq!(records.len(), 6);
        for i in 0..2 {
            let e = &records[4 + i];
            assert_eq!(e.dataset, ENSEMBLE_DATASET);
            for j in 0..e.probabilities.len() {
                let m = (records[i].probabilities[j] + records[2 + i].probabilities[j]) / 2.0;
                assert_eq!(e.probabilities[j], m);
            }
        }
    }
}
