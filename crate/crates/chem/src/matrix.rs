//! Standardisation, correlation distances, PCA and binned distributions.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Z-scores each column (population standard deviation) and replaces
/// missing cells with 0. Constant columns become all zero.
pub fn standardize(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut col in out.columns_mut() {
        let vals: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let n = vals.len() as f64;
        let (mean, sd) = if vals.is_empty() {
            (0.0, 0.0)
        } else {
            let m = vals.iter().sum::<f64>() / n;
            (m, (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
        };
        col.mapv_inplace(|v| {
            if v.is_nan() || sd == 0.0 {
                0.0
            } else {
                (v - mean) / sd
            }
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDistances {
    pub matrix: Array2<f64>,
    /// Rows with zero variance; their distance to every other row is 1.
    pub constant_rows: Vec<usize>,
}

/// `d(i, j) = 1 − r(rowᵢ, rowⱼ)`, symmetric with a zero diagonal.
pub fn correlation_distance_matrix(x: ArrayView2<f64>) -> CorrelationDistances {
    let n = x.nrows();
    let centred: Vec<(Array1<f64>, f64)> = x
        .rows()
        .into_iter()
        .map(|r| {
            let m = r.mean().unwrap_or(0.0);
            let c = r.mapv(|v| v - m);
            let norm = c.dot(&c).sqrt();
            (c, norm)
        })
        .collect();
    let constant_rows: Vec<usize> = (0..n).filter(|&i| centred[i].1 == 0.0).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let ((a, na), (b, nb)) = (&centred[i], &centred[j]);
                        if *na == 0.0 || *nb == 0.0 {
                            1.0
                        } else {
                            1.0 - (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
                        }
                    }
                })
                .collect()
        })
        .collect();
    // evaluate each pair once so the matrix is exactly symmetric
    let matrix = Array2::from_shape_fn((n, n), |(i, j)| if i <= j { rows[i][j] } else { rows[j][i] });
    CorrelationDistances {
        matrix,
        constant_rows,
    }
}

/// Upper-triangle values split by whether each endpoint is a test row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupedValues {
    pub within_train: Vec<f64>,
    pub within_test: Vec<f64>,
    pub cross: Vec<f64>,
}

pub fn group_pairs(matrix: ArrayView2<f64>, is_test: &[bool]) -> GroupedValues {
    let n = matrix.nrows();
    assert_eq!(is_test.len(), n, "one membership flag per row");
    let mut g = GroupedValues::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = matrix[[i, j]];
            match (is_test[i], is_test[j]) {
                (false, false) => g.within_train.push(v),
                (true, true) => g.within_test.push(v),
                _ => g.cross.push(v),
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        if !(lo..=hi).contains(&v) {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Rows × components.
    pub scores: Array2<f64>,
    /// Components × features, orthonormal rows.
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
    pub explained_fraction: Vec<f64>,
    pub mean: Vec<f64>,
    /// Zero total variance; scores are all zero.
    pub degenerate: bool,
}

/// Principal components of the sample covariance. Each component is signed
/// so that its largest-magnitude loading is positive.
pub fn pca_embed(x: ArrayView2<f64>, n_components: usize) -> Result<Pca, String> {
    let (n, p) = x.dim();
    if n_components == 0 || n_components > n.min(p) {
        return Err(format!(
            "n_components must lie in 1..={}, got {n_components}",
            n.min(p)
        ));
    }
    if n < 2 {
        return Err("PCA needs at least two rows".into());
    }
    let mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| x[[i, j]] - mean[j]);
    let denom = (n - 1) as f64;

    // eigen-pairs of the covariance, largest first
    let (values, vectors): (Vec<f64>, DMatrix<f64>) = if p <= n {
        let cov = (xc.transpose() * &xc) / denom;
        let eig = SymmetricEigen::new(cov);
        sort_eigen(eig.eigenvalues.as_slice(), &eig.eigenvectors)
    } else {
        let gram = (&xc * xc.transpose()) / denom;
        let eig = SymmetricEigen::new(gram);
        let (vals, u) = sort_eigen(eig.eigenvalues.as_slice(), &eig.eigenvectors);
        let top = vals.first().copied().unwrap_or(0.0).max(0.0);
        let mut v = DMatrix::zeros(p, n);
        let mut kept = Vec::new();
        for k in 0..n {
            if vals[k] > top * 1e-12 && vals[k] > 0.0 {
                let col = xc.transpose() * u.column(k) / (vals[k] * denom).sqrt();
                v.set_column(k, &col);
                kept.push(k);
            }
        }
        // fill null directions with an orthonormal completion
        let mut basis: Vec<nalgebra::DVector<f64>> = kept.iter().map(|&k| v.column(k).into_owned()).collect();
        for k in 0..n {
            if kept.contains(&k) {
                continue;
            }
            for e in 0..p {
                let mut cand = nalgebra::DVector::zeros(p);
                cand[e] = 1.0;
                for b in &basis {
                    let d = b.dot(&cand);
                    cand -= b * d;
                }
                let norm = cand.norm();
                if norm > 1e-6 {
                    cand /= norm;
                    v.set_column(k, &cand);
                    basis.push(cand);
                    break;
                }
            }
        }
        (vals, v)
    };

    let values: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = if p <= n {
        values.iter().sum()
    } else {
        (0..p).map(|j| xc.column(j).norm_squared() / denom).sum()
    };
    let degenerate = total <= 0.0;
    let mut components = Array2::zeros((n_components, p));
    for k in 0..n_components {
        let col = vectors.column(k);
        let mut lead = 0;
        for j in 1..p {
            if col[j].abs() > col[lead].abs() {
                lead = j;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..p {
            components[[k, j]] = sign * col[j];
        }
    }
    let scores = if degenerate {
        Array2::zeros((n, n_components))
    } else {
        Array2::from_shape_fn((n, n_components), |(i, k)| {
            (0..p).map(|j| xc[(i, j)] * components[[k, j]]).sum()
        })
    };
    let explained_variance: Vec<f64> = values[..n_components].to_vec();
    let explained_fraction = explained_variance
        .iter()
        .map(|v| if degenerate { 0.0 } else { v / total })
        .collect();
    Ok(Pca {
        scores,
        components,
        explained_variance,
        explained_fraction,
        mean,
        degenerate,
    })
}

fn sort_eigen(values: &[f64], vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted = idx.iter().map(|&i| values[i]).collect();
    let mut v = DMatrix::zeros(vectors.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        v.set_column(k, &vectors.column(i));
    }
    (sorted, v)
}
