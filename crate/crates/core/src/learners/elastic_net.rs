//! Elastic-net penalised logistic regression.
//!
//! Minimises
//!
//! ```text
//! mean_i logloss(y_i, x_i·w + b) + l2_weight·‖w‖²/2 + l1_weight·‖w‖₁
//! ```
//!
//! over z-scored features with a monotone accelerated proximal gradient
//! method (soft-thresholding prox, backtracking on the smooth part, restart
//! whenever the momentum step would increase the objective). The intercept is
//! not penalised.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticNetParams {
    pub l1_weight: f64,
    pub l2_weight: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            l1_weight: 1e-2,
            l2_weight: 1e-2,
            max_iters: 10_000,
            tol: 1e-7,
        }
    }
}

impl ElasticNetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l1_weight >= 0.0) || !(self.l2_weight >= 0.0) {
            return Err(Error::InvalidArgument(
                "elastic net penalties must be non-negative".into(),
            ));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "elastic net needs tol > 0 and max_iters > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Coefficients on the standardized scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ElasticNetModel {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let z = row
                    .iter()
                    .zip(&self.means)
                    .zip(&self.scales)
                    .zip(&self.coefficients)
                    .map(|(((v, m), s), w)| (v - m) / s * w)
                    .sum::<f64>()
                    + self.intercept;
                sigmoid(z)
            })
            .collect()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean logistic loss plus the ridge term.
pub fn smooth_objective(x: ArrayView2<f64>, y: &[bool], w: ArrayView1<f64>, b: f64, l2: f64) -> f64 {
    let z = x.dot(&w);
    let n = y.len() as f64;
    let loss: f64 = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| {
            let zi = zi + b;
            softplus(zi) - if yi { zi } else { 0.0 }
        })
        .sum::<f64>()
        / n;
    loss + 0.5 * l2 * w.dot(&w)
}

/// Gradient of [`smooth_objective`] with respect to `(w, b)`.
pub fn smooth_gradient(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    b: f64,
    l2: f64,
) -> (Array1<f64>, f64) {
    let n = y.len() as f64;
    let residual: Array1<f64> = x
        .dot(&w)
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| (sigmoid(zi + b) - if yi { 1.0 } else { 0.0 }) / n)
        .collect();
    let gw = x.t().dot(&residual) + &(&w * l2);
    (gw, residual.sum())
}

/// Full penalised objective.
pub fn objective(x: ArrayView2<f64>, y: &[bool], w: ArrayView1<f64>, b: f64, p: &ElasticNetParams) -> f64 {
    smooth_objective(x, y, w, b, p.l2_weight) + p.l1_weight * w.iter().map(|v| v.abs()).sum::<f64>()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn standardize(x: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>, ndarray::Array2<f64>) {
    let n = x.nrows() as f64;
    let means: Vec<f64> = x.mean_axis(Axis(0)).map(|m| m.to_vec()).unwrap_or_default();
    let scales: Vec<f64> = x
        .columns()
        .into_iter()
        .zip(&means)
        .map(|(c, m)| {
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let mut z = x.to_owned();
    for (mut col, (m, s)) in z.columns_mut().into_iter().zip(means.iter().zip(&scales)) {
        col.mapv_inplace(|v| (v - m) / s);
    }
    (means, scales, z)
}

/// Fitting trace: the model plus the objective after every iteration.
#[derive(Debug, Clone)]
pub struct FitTrace {
    pub model: ElasticNetModel,
    pub objective_history: Vec<f64>,
}

pub fn fit(p: &ElasticNetParams, x: ArrayView2<f64>, y: &[bool]) -> ElasticNetModel {
    fit_with_trace(p, x, y).model
}

pub fn fit_with_trace(p: &ElasticNetParams, x: ArrayView2<f64>, y: &[bool]) -> FitTrace {
    let (means, scales, xs) = standardize(x);
    let xs = xs.view();
    let n_feat = xs.ncols();
    let base = y.iter().filter(|&&l| l).count() as f64 / y.len() as f64;

    let penalty = |w: &Array1<f64>| p.l1_weight * w.iter().map(|v| v.abs()).sum::<f64>();
    let mut w = Array1::<f64>::zeros(n_feat);
    let mut b = (base / (1.0 - base)).ln();
    let mut f_x = smooth_objective(xs, y, w.view(), b, p.l2_weight) + penalty(&w);
    let mut history = vec![f_x];

    let (mut yw, mut yb) = (w.clone(), b);
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < p.max_iters {
        iterations += 1;
        let f_y = smooth_objective(xs, y, yw.view(), yb, p.l2_weight);
        let (gw, gb) = smooth_gradient(xs, y, yw.view(), yb, p.l2_weight);
        step *= 1.25;
        let (zw, zb, f_z) = loop {
            let zw: Array1<f64> = yw
                .iter()
                .zip(gw.iter())
                .map(|(v, g)| soft_threshold(v - step * g, step * p.l1_weight))
                .collect();
            let zb = yb - step * gb;
            let f_z = smooth_objective(xs, y, zw.view(), zb, p.l2_weight);
            let dw = &zw - &yw;
            let db = zb - yb;
            let bound = f_y + gw.dot(&dw) + gb * db + (dw.dot(&dw) + db * db) / (2.0 * step);
            if f_z <= bound || step < 1e-12 {
                break (zw, zb, f_z);
            }
            step *= 0.5;
        };

        let gap = zw
            .iter()
            .zip(yw.iter())
            .map(|(a, c)| (a - c).abs())
            .fold((zb - yb).abs(), f64::max)
            / step;

        let obj_z = f_z + penalty(&zw);
        let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        if obj_z <= f_x {
            let (pw, pb) = (w, b);
            w = zw;
            b = zb;
            f_x = obj_z;
            let c = (momentum - 1.0) / next_momentum;
            yw = &w + &((&w - &pw) * c);
            yb = b + (b - pb) * c;
            momentum = next_momentum;
        } else {
            // momentum overshot; restart from the incumbent
            yw = w.clone();
            yb = b;
            momentum = 1.0;
        }
        history.push(f_x);
        if gap <= p.tol {
            converged = true;
            break;
        }
    }

    FitTrace {
        model: ElasticNetModel {
            means,
            scales,
            coefficients: w.to_vec(),
            intercept: b,
            iterations,
            converged,
        },
        objective_history: history,
    }
}
