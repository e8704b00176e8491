//! Gaussian naive Bayes with a per-feature variance floor.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    pub variance_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { variance_floor: 1e-9 }
    }
}

impl NaiveBayesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance_floor > 0.0) {
            return Err(Error::InvalidArgument("variance_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub prior: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl ClassStats {
    fn log_joint(&self, row: ArrayView1<f64>) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.prior.ln()
            + row
                .iter()
                .zip(&self.means)
                .zip(&self.variances)
                .map(|((x, m), v)| -0.5 * (ln_2pi + v.ln()) - (x - m).powi(2) / (2.0 * v))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub negative: ClassStats,
    pub positive: ClassStats,
}

impl NaiveBayesModel {
    pub fn n_features(&self) -> usize {
        self.positive.means.len()
    }

    /// `[P(negative | x), P(positive | x)]` per row.
    pub fn posterior(&self, x: ArrayView2<f64>) -> Vec<[f64; 2]> {
        x.rows()
            .into_iter()
            .map(|row| {
                let l0 = self.negative.log_joint(row);
                let l1 = self.positive.log_joint(row);
                let m = l0.max(l1);
                let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
                let z = e0 + e1;
                [e0 / z, e1 / z]
            })
            .collect()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.posterior(x).into_iter().map(|p| p[1]).collect()
    }
}

fn class_stats(p: &NaiveBayesParams, x: ArrayView2<f64>, y: &[bool], class: bool) -> ClassStats {
    let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
    let n = rows.len() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut variances = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mean = rows.iter().map(|&i| col[i]).sum::<f64>() / n;
        let var = rows.iter().map(|&i| (col[i] - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        variances.push(var.max(p.variance_floor));
    }
    ClassStats {
        prior: n / y.len() as f64,
        means,
        variances,
    }
}

pub fn fit(p: &NaiveBayesParams, x: ArrayView2<f64>, y: &[bool]) -> NaiveBayesModel {
    NaiveBayesModel {
        negative: class_stats(p, x, y, false),
        positive: class_stats(p, x, y, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_classes_give_half_at_midpoint() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let y = [false, false, false, true, true, true];
        let m = fit(&NaiveBayesParams::default(), x.view(), &y);
        assert_eq!(m.predict_proba(array![[0.0]].view()), vec![0.5]);
        let p = m.predict_proba(array![[2.5], [-2.5]].view());
        assert!(p[0] > 0.9 && p[1] < 0.1);
    }

    #[test]
    fn posterior_sums_to_one() {
        let x = array![[0.0, 1.0], [1.0, 1.0], [5.0, 2.0], [6.0, 2.0]];
        let m = fit(&NaiveBayesParams::default(), x.view(), &[false, false, true, true]);
        for post in m.posterior(array![[100.0, -5.0], [3.0, 1.5], [0.0, 0.0]].view()) {
            assert!((post[0] + post[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn floor_applies_to_constant_features() {
        let x = array![[1.0, 0.0], [1.0, 1.0], [1.0, 3.0], [1.0, 4.0]];
        let m = fit(&NaiveBayesParams { variance_floor: 1e-3 }, x.view(), &[false, false, true, true]);
        assert_eq!(m.positive.variances[0], 1e-3);
    }
}
