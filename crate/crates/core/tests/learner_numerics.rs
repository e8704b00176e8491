use ndarray::{Array1, Array2};
use timesplit_core::learners::elastic_net::{fit_with_trace, smooth_gradient, smooth_objective, ElasticNetParams};
use timesplit_core::learners::gbdt::{self, GbdtParams};
use timesplit_core::learners::naive_bayes;
use timesplit_core::rng::SeededRng;

fn data(rng: &mut SeededRng, n: usize, p: usize) -> (Array2<f64>, Vec<bool>) {
    let x = Array2::from_shape_fn((n, p), |_| rng.normal());
    let y = x.rows().into_iter().map(|r| r[0] + 0.5 * rng.normal() > 0.0).collect();
    (x, y)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = SeededRng::new(5);
    let (x, y) = data(&mut rng, 40, 4);
    let l2 = 0.3;
    let h = 1e-5;
    for _ in 0..100 {
        let w = Array1::from_shape_fn(4, |_| rng.normal());
        let b = rng.normal();
        let (gw, gb) = smooth_gradient(x.view(), &y, w.view(), b, l2);
        let mut numeric = Vec::new();
        for j in 0..4 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            numeric.push(
                (smooth_objective(x.view(), &y, up.view(), b, l2) - smooth_objective(x.view(), &y, down.view(), b, l2))
                    / (2.0 * h),
            );
        }
        numeric.push(
            (smooth_objective(x.view(), &y, w.view(), b + h, l2) - smooth_objective(x.view(), &y, w.view(), b - h, l2))
                / (2.0 * h),
        );
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / norm.max(1e-12) < 1e-6, "relative error {}", diff / norm);
    }
}

#[test]
fn objective_never_increases() {
    let mut rng = SeededRng::new(6);
    for l1 in [0.0, 1e-3, 1e-2, 0.1] {
        let (x, y) = data(&mut rng, 120, 6);
        let params = ElasticNetParams { l1_weight: l1, ..Default::default() };
        let trace = fit_with_trace(&params, x.view(), &y);
        for w in trace.objective_history.windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
    }
}

#[test]
fn zero_trees_give_base_rate_exactly() {
    let mut rng = SeededRng::new(7);
    let (x, y) = data(&mut rng, 53, 3);
    let base = y.iter().filter(|&&v| v).count() as f64 / y.len() as f64;
    let m = gbdt::fit(&GbdtParams { n_trees: 0, ..Default::default() }, x.view(), &y);
    assert!(m.predict_proba(x.view()).iter().all(|&p| p == base));
}

#[test]
fn naive_bayes_is_a_probability() {
    let mut rng = SeededRng::new(8);
    let (x, y) = data(&mut rng, 80, 5);
    let m = naive_bayes::fit(&Default::default(), x.view(), &y);
    for p in m.predict_proba(x.view()) {
        assert!((0.0..=1.0).contains(&p));
    }
}
