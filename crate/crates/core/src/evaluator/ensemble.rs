use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::learners::{train, LearnerSpec, TrainedModel};
use crate::rng::derive_seed;
use crate::split::{stratified_kfold, FoldPlan};

/// A trained model plus the column means used to fill missing cells.
#[derive(Debug, Clone)]
pub struct FittedMember {
    pub fill: Vec<f64>,
    pub model: TrainedModel,
}

fn impute(x: ArrayView2<f64>, fill: &[f64]) -> Array2<f64> {
    let mut out = x.to_owned();
    for (mut col, &f) in out.columns_mut().into_iter().zip(fill) {
        col.mapv_inplace(|v| if v.is_nan() { f } else { v });
    }
    out
}

impl FittedMember {
    /// Missing training cells take the column mean over the training rows
    /// (0 for an all-missing column) before the learner sees them.
    pub fn fit(spec: &LearnerSpec, x: ArrayView2<f64>, y: &[bool]) -> Result<Self> {
        let fill: Vec<f64> = x
            .columns()
            .into_iter()
            .map(|c| {
                let (s, n) = c
                    .iter()
                    .filter(|v| !v.is_nan())
                    .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    0.0
                } else {
                    s / n as f64
                }
            })
            .collect();
        let model = train(spec, impute(x, &fill).view(), y)?;
        Ok(FittedMember { fill, model })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.fill.len() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, input has {}",
                self.fill.len(),
                x.ncols()
            )));
        }
        self.model.predict_proba(impute(x, &self.fill).view())
    }
}

/// k models, each trained on k−1 stratified parts; predictions are averaged.
#[derive(Debug, Clone)]
pub struct FoldEnsemble {
    pub plan: FoldPlan,
    pub members: Vec<FittedMember>,
}

impl FoldEnsemble {
    pub fn fit(
        spec: &LearnerSpec,
        x: ArrayView2<f64>,
        y: &[bool],
        k: usize,
        splitting_seed: u64,
        training_seed: u64,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        let ids: Vec<String> = (0..y.len()).map(|i| i.to_string()).collect();
        let plan = stratified_kfold(&ids, y, k, splitting_seed)?;
        let members = (0..k)
            .map(|f| {
                let rows = plan.complement(f);
                let xf = x.select(Axis(0), &rows);
                let yf: Vec<bool> = rows.iter().map(|&i| y[i]).collect();
                let fold_spec = spec.with_seed(derive_seed(training_seed, &format!("fold{f}")));
                FittedMember::fit(&fold_spec, xf.view(), &yf)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FoldEnsemble { plan, members })
    }

    /// One probability vector per member, in fold order.
    pub fn member_predictions(&self, x: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        mean_of_vectors(&self.member_predictions(x)?)
    }
}

pub fn train_fold_ensemble(
    spec: &LearnerSpec,
    x_train: ArrayView2<f64>,
    y_train: &[bool],
    x_test: ArrayView2<f64>,
    k: usize,
    splitting_seed: u64,
    training_seed: u64,
) -> Result<Vec<f64>> {
    FoldEnsemble::fit(spec, x_train, y_train, k, splitting_seed, training_seed)?.predict(x_test)
}

/// Element-wise arithmetic mean, summed in input order.
pub fn mean_of_vectors(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one probability vector".into()))?;
    if let Some(v) = vectors.iter().find(|v| v.len() != first.len()) {
        return Err(Error::ShapeMismatch(format!(
            "probability vectors of lengths {} and {}",
            first.len(),
            v.len()
        )));
    }
    let k = vectors.len() as f64;
    Ok((0..first.len())
        .map(|i| vectors.iter().map(|v| v[i]).sum::<f64>() / k)
        .collect())
}

pub fn ensemble_across_datasets(per_dataset: &[Vec<f64>]) -> Result<Vec<f64>> {
    mean_of_vectors(per_dataset)
}

/// Appends columns in list order, prefixing names with the dataset name.
pub fn concatenate_datasets(tables: &[FeatureTable], name: &str) -> Result<FeatureTable> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
    if tables.len() == 1 {
        return Ok(first.clone());
    }
    let ids = &first.compound_ids;
    let mut aligned = Vec::with_capacity(tables.len());
    for t in tables {
        let mut a: Vec<&String> = t.compound_ids.iter().collect();
        let mut b: Vec<&String> = ids.iter().collect();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::ShapeMismatch(format!(
                "dataset {:?} covers different compounds than {:?}",
                t.dataset_name, first.dataset_name
            )));
        }
        aligned.push(t.select_rows(ids)?);
    }
    let views: Vec<ArrayView2<f64>> = aligned.iter().map(|t| t.values.view()).collect();
    let values = concatenate(Axis(1), &views).expect("row counts agree");
    let names = aligned.iter().flat_map(|t| t.namespaced_feature_names()).collect();
    FeatureTable::new(name, ids.clone(), names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerSpec;
    use crate::rng::SeededRng;
    use ndarray::array;

    #[test]
    fn mean_examples() {
        assert_eq!(mean_of_vectors(&[vec![0.2], vec![0.8]]).unwrap(), vec![0.5]);
        let v = vec![0.1, 0.7];
        assert_eq!(mean_of_vectors(&[v.clone(), v.clone(), v.clone()]).unwrap().len(), 2);
        let e = ensemble_across_datasets(&[vec![0.2, 0.4], vec![0.6, 0.8]]).unwrap();
        assert!((e[0] - 0.4).abs() < 1e-15 && (e[1] - 0.6).abs() < 1e-15);
        assert_eq!(ensemble_across_datasets(&[vec![0.3, 0.9]]).unwrap(), vec![0.3, 0.9]);
        assert!(ensemble_across_datasets(&[vec![0.3], vec![0.3, 0.1]]).is_err());
        assert!(ensemble_across_datasets(&[]).is_err());
    }

    #[test]
    fn imputation_uses_training_means() {
        let x = array![[1.0, f64::NAN], [3.0, 2.0], [f64::NAN, 4.0], [5.0, 6.0]];
        let m = FittedMember::fit(&LearnerSpec::naive_bayes(), x.view(), &[false, false, true, true]).unwrap();
        assert_eq!(m.fill, vec![3.0, 4.0]);
        let p = m.predict(array![[f64::NAN, f64::NAN]].view()).unwrap();
        assert!(p[0].is_finite());
    }

    #[test]
    fn concatenation_prefixes_and_aligns() {
        let a = FeatureTable::new("a", vec!["x".into(), "y".into(), "z".into()], vec!["f".into(), "g".into()], array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let b = FeatureTable::new("b", vec!["z".into(), "x".into(), "y".into()], vec!["f".into(), "g".into(), "h".into(), "i".into()], Array2::from_shape_fn((3, 4), |(i, j)| (10 * i + j) as f64)).unwrap();
        let c = concatenate_datasets(&[a.clone(), b], "concat").unwrap();
        assert_eq!(c.values.dim(), (3, 6));
        assert_eq!(c.feature_names[0], "a.f");
        assert_eq!(c.feature_names[2], "b.f");
        // row "x" of b was its second row
        assert_eq!(c.values[[0, 2]], 10.0);
        assert_eq!(concatenate_datasets(&[a.clone()], "concat").unwrap(), a);
        let d = FeatureTable::new("d", vec!["q".into(), "y".into(), "z".into()], vec!["f".into()], array![[1.0], [2.0], [3.0]]).unwrap();
        assert!(concatenate_datasets(&[a, d], "concat").is_err());
    }

    #[test]
    fn ensemble_is_mean_of_members() {
        let mut rng = SeededRng::new(5);
        let x = Array2::from_shape_fn((40, 3), |_| rng.normal());
        let y: Vec<bool> = x.rows().into_iter().map(|r| r[0] > 0.0).collect();
        let e = FoldEnsemble::fit(&LearnerSpec::elastic_net(), x.view(), &y, 5, 1, 2).unwrap();
        let members = e.member_predictions(x.view()).unwrap();
        let avg = e.predict(x.view()).unwrap();
        for i in 0..40 {
            let m = members.iter().map(|v| v[i]).sum::<f64>() / 5.0;
            assert_eq!(m, avg[i]);
        }
        let again = train_fold_ensemble(&LearnerSpec::elastic_net(), x.view(), &y, x.view(), 5, 1, 2).unwrap();
        assert_eq!(again, avg);
    }
}
