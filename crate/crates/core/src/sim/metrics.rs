use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::data::SupportSet;

/// Mean over test rows of `(xᵀ(β̂ − β*))² / σ²`.
pub fn rpe(beta_hat: ArrayView1<'_, f64>, beta_star: ArrayView1<'_, f64>, x_test: &Array2<f64>, sigma2: f64) -> f64 {
    rpe_with_intercept(0.0, beta_hat, beta_star, x_test, sigma2)
}

/// As [`rpe`] with the fitted prediction `b₀ + xᵀβ̂`.
pub fn rpe_with_intercept(
    intercept: f64,
    beta_hat: ArrayView1<'_, f64>,
    beta_star: ArrayView1<'_, f64>,
    x_test: &Array2<f64>,
    sigma2: f64,
) -> f64 {
    assert!(sigma2 > 0.0, "sigma2 must be positive");
    let diff = &beta_hat - &beta_star;
    let err = x_test.dot(&diff) + intercept;
    err.dot(&err) / (x_test.nrows() as f64 * sigma2)
}

/// `(#{j ∈ S : |β̂_j| > eps}, #{j ∉ S : |β̂_j| > eps})`.
pub fn tp_fp(beta_hat: ArrayView1<'_, f64>, support: &SupportSet, eps: f64) -> (usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    for (j, b) in beta_hat.iter().enumerate() {
        if b.abs() > eps {
            if support.contains(j) {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    (tp, fp)
}

/// Median, averaging the middle pair for even lengths. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Standard deviation of the medians of `resamples` bootstrap resamples.
pub fn bootstrap_median_se<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> Option<f64> {
    if values.len() < 2 || resamples < 2 {
        return None;
    }
    let n = values.len();
    let mut buf = vec![0.0; n];
    let meds: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..n)];
            }
            median(&buf).expect("nonempty")
        })
        .collect();
    let mean = meds.iter().sum::<f64>() / resamples as f64;
    let var = meds.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Some(var.sqrt())
}
