//! Small deterministic designs used by tests, examples and the CLI fixtures.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::data::Dataset;
use crate::rng::stream;

/// `n×p` design with `(1/n) XᵀX = I` and mean-zero columns (`p < n`).
pub fn orthonormal_design(n: usize, p: usize, seed: u64) -> Array2<f64> {
    assert!(p < n, "orthonormal design needs p < n");
    let mut rng = stream(seed, &[0x0f7a]);
    let mut q = Array2::<f64>::zeros((n, p));
    // Gram-Schmidt against the constant vector and previous columns
    let ones = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    for j in 0..p {
        let mut v: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            let proj = v.dot(&ones);
            v.scaled_add(-proj, &ones);
            for k in 0..j {
                let col = q.column(k);
                let proj = v.dot(&col);
                v.scaled_add(-proj, &col);
            }
        }
        let norm = v.dot(&v).sqrt();
        q.column_mut(j).assign(&(v / norm));
    }
    q * (n as f64).sqrt()
}

/// Gaussian design with a noisy linear response, not standardized.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = stream(seed, &[0xda7a]);
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let beta: Array1<f64> = (0..p).map(|j| if j % 3 == 0 { 1.0 + j as f64 * 0.1 } else { 0.0 }).collect();
    let noise: Array1<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let y = x.dot(&beta) + noise * 0.5;
    Dataset::new(x, y).expect("finite by construction")
}

/// A small sparse regression problem with its ground truth.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    /// Standardized data.
    pub data: Dataset,
    pub truth: crate::data::TrueModel,
    /// `y − Xβ*` in the standardized coordinates.
    pub noise: Array1<f64>,
    /// OLS on `data`.
    pub init: Array1<f64>,
}

/// Random instance with `2 ≤ p ≤ 6`, `p + 4 ≤ n ≤ 30`, correlated columns
/// and a support that is neither empty nor full.
pub fn small_instance(seed: u64) -> SmallInstance {
    let mut rng = stream(seed, &[0x5a11]);
    let p = rng.random_range(2..=6usize);
    let n = rng.random_range(p + 4..=30usize);
    let rho: f64 = rng.random_range(-0.4..0.7);
    let mut x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
    for j in 1..p {
        let prev = x.column(j - 1).to_owned();
        x.column_mut(j).scaled_add(rho, &prev);
    }
    let s = rng.random_range(1..p);
    let mut beta = Array1::<f64>::zeros(p);
    let mut slots: Vec<usize> = (0..p).collect();
    for k in 0..s {
        let pick = rng.random_range(k..p);
        slots.swap(k, pick);
        let mag: f64 = rng.random_range(0.3..2.0);
        beta[slots[k]] = if rng.random_bool(0.5) { mag } else { -mag };
    }
    let sigma: f64 = rng.random_range(0.1..1.0);
    let eps: Array1<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let data = Dataset::new(x.clone(), x.dot(&beta) + eps)
        .expect("finite by construction")
        .standardize()
        .expect("continuous columns");
    // β* in the standardized coordinates, so that y = Xβ* + noise there
    let beta_std = data.standardization().expect("standardized").to_standardized(beta.view());
    let noise = data.y() - &data.x().dot(&beta_std);
    let truth = crate::data::TrueModel::new(beta_std, sigma * sigma).expect("positive noise level");
    let init = crate::initial::fit_ols(&data).expect("n > p").beta;
    SmallInstance { data, truth, noise, init }
}
