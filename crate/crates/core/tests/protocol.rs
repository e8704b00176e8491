use ndarray::{Array2, Axis};
use timesplit_core::evaluator::train_fold_ensemble;
use timesplit_core::importance::permutation_importance;
use timesplit_core::learners::{train, LearnerSpec};
use timesplit_core::rng::{derive_seed, SeededRng};
use timesplit_core::split::stratified_kfold;

fn data(seed: u64, n: usize, p: usize, missing: f64) -> (Array2<f64>, Vec<bool>) {
    let mut rng = SeededRng::new(seed);
    let mut x = Array2::from_shape_fn((n, p), |_| rng.normal());
    let y: Vec<bool> = x.rows().into_iter().map(|r| r[0] - r[1] + 0.7 * rng.normal() > 0.0).collect();
    for v in x.iter_mut() {
        if rng.bernoulli(missing) {
            *v = f64::NAN;
        }
    }
    (x, y)
}

/// Per-fold training-mean imputation, then one model per fold, then the mean.
fn ensemble_oracle(spec: &LearnerSpec, x: &Array2<f64>, y: &[bool], test: &Array2<f64>, split: u64, training: u64) -> Vec<f64> {
    let ids: Vec<String> = (0..y.len()).map(|i| i.to_string()).collect();
    let plan = stratified_kfold(&ids, y, 5, split).unwrap();
    let mut per_fold = Vec::new();
    for f in 0..5 {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| plan.assignments[i] != f).collect();
        let mut xf = x.select(Axis(0), &rows);
        let fill: Vec<f64> = xf
            .columns()
            .into_iter()
            .map(|c| {
                let v: Vec<f64> = c.iter().copied().filter(|v| !v.is_nan()).collect();
                if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
            })
            .collect();
        let impute = |m: &mut Array2<f64>| {
            for mut row in m.rows_mut() {
                for (v, &f) in row.iter_mut().zip(&fill) {
                    if v.is_nan() {
                        *v = f;
                    }
                }
            }
        };
        impute(&mut xf);
        let mut xt = test.clone();
        impute(&mut xt);
        let yf: Vec<bool> = rows.iter().map(|&i| y[i]).collect();
        let model = train(&spec.with_seed(derive_seed(training, &format!("fold{f}"))), xf.view(), &yf).unwrap();
        per_fold.push(model.predict_proba(xt.view()).unwrap());
    }
    (0..test.nrows())
        .map(|i| per_fold.iter().map(|p| p[i]).sum::<f64>() / 5.0)
        .collect()
}

#[test]
fn five_fold_ensemble_is_the_mean_of_its_members() {
    for (spec, missing) in [
        (LearnerSpec::elastic_net(), 0.0),
        (LearnerSpec::naive_bayes(), 0.1),
        (LearnerSpec::gbdt(), 0.1),
    ] {
        let (x, y) = data(3, 90, 4, missing);
        let (t, _) = data(4, 30, 4, missing);
        let got = train_fold_ensemble(&spec, x.view(), &y, t.view(), 5, 77, 88).unwrap();
        let want = ensemble_oracle(&spec, &x, &y, &t, 77, 88);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-15, "{:?}: {a} vs {b}", spec.kind());
        }
    }
}

#[test]
fn ignored_feature_has_zero_importance() {
    // column 2 is constant in training, so no tree can split on it
    let (mut x, y) = data(5, 100, 3, 0.0);
    x.column_mut(2).fill(1.0);
    let (t, yt) = data(6, 60, 3, 0.0);
    let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let report = permutation_importance(&LearnerSpec::gbdt(), &names, x.view(), &y, t.view(), &yt, 5, 10, 42).unwrap();
    assert_eq!(report.get("c"), Some(0.0));
    assert!(report.get("a").unwrap() > 0.0);
}
