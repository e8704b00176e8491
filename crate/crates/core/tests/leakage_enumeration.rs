use std::collections::BTreeMap;
use timesplit_core::leakage::{top_feature_lag_test, LagTable};
use timesplit_core::rng::SeededRng;

fn table(means: &[i32]) -> LagTable {
    let mut lags = BTreeMap::new();
    for (j, &m) in means.iter().enumerate() {
        lags.insert(("c".to_string(), format!("f{j:02}")), m);
    }
    LagTable { lags, skipped: 0 }
}

fn subsets(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if current.len() == k {
        out(current);
        return;
    }
    for i in start..n {
        current.push(i);
        subsets(n, k, i + 1, current, out);
        current.pop();
    }
}

/// Exact fraction of k-subsets whose mean is at or below the observed one.
fn exact_p(values: &[i32], top: &[usize]) -> f64 {
    let k = top.len();
    let observed: i64 = top.iter().map(|&i| i64::from(values[i])).sum();
    let (mut hit, mut total) = (0u64, 0u64);
    subsets(values.len(), k, 0, &mut Vec::new(), &mut |s| {
        total += 1;
        if s.iter().map(|&i| i64::from(values[i])).sum::<i64>() <= observed {
            hit += 1;
        }
    });
    hit as f64 / total as f64
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let mut rng = SeededRng::new(9);
    for (n, k) in [(12, 3), (20, 5), (25, 6), (30, 4)] {
        let values: Vec<i32> = (0..n).map(|_| rng.uniform_int(-60, 120) as i32).collect();
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let top = &order[..k];
        let ranked: Vec<String> = top.iter().map(|i| format!("f{i:02}")).collect();
        let draws = 100_000;
        let r = top_feature_lag_test(&table(&values), &ranked, k, draws, 3).unwrap();
        let p = exact_p(&values, top);
        let mc = r.count_at_or_below as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((mc - p).abs() <= 3.0 * se.max(1.0 / draws as f64), "n={n} k={k}: {mc} vs {p}");
    }
}

#[test]
fn p_value_uses_add_one_rule() {
    let r = top_feature_lag_test(&table(&[0, 10, 20, 30, 40]), &["f00".into()], 1, 1000, 1).unwrap();
    assert_eq!(r.p_value, (1 + r.count_at_or_below) as f64 / 1001.0);
    assert_eq!(r.observed_mean_lag, 0.0);
}

#[test]
fn same_seed_same_result() {
    let t = table(&[5, -3, 12, 40, 7, 7, 19, -20]);
    let ranked: Vec<String> = ["f03", "f01", "f07"].iter().map(|s| s.to_string()).collect();
    let a = top_feature_lag_test(&t, &ranked, 3, 20_000, 8).unwrap();
    let b = top_feature_lag_test(&t, &ranked, 3, 20_000, 8).unwrap();
    assert_eq!(a, b);
}
