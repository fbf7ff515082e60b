use std::collections::HashMap;

use ndarray::Array1;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::procedure::Procedure;
use crate::data::{Dataset, SignVector};
use crate::error::{Error, Result};
use crate::initial::InitialEstimate;
use crate::path::PathSolution;
use crate::rng::{derive_key, stream};

/// Outcome of k-fold cross validation over a λ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: f64,
    /// Position of `lambda` in `grid`.
    pub index: usize,
    /// Coefficients refit on the full data at `lambda`.
    pub beta: Array1<f64>,
    pub grid: Vec<f64>,
    /// Mean validation MSE per grid point.
    pub cv_errors: Vec<f64>,
    pub initial: Option<InitialEstimate>,
    /// Full-data path over `grid`.
    pub path: PathSolution,
}

/// Memoizes first-stage fits for one dataset, keyed by the fit seed and the
/// initial estimator, so procedures sharing an initial estimator and seed
/// fit it once. Reusing a cache across datasets gives wrong answers.
#[derive(Debug, Default)]
pub struct InitialCache {
    fits: HashMap<(u64, String), Result<Option<InitialEstimate>>>,
}

impl InitialCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit(&mut self, procedure: &Procedure, d: &Dataset, seed: u64) -> Result<Option<InitialEstimate>> {
        let key = (seed, format!("{:?}", procedure.initial()));
        self.fits
            .entry(key)
            .or_insert_with(|| procedure.fit_initial(d, seed))
            .clone()
    }
}

/// Shuffles `0..n` with `seed` and cuts it into `k` contiguous blocks.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, &[0xf01d]));
    (0..k)
        .map(|f| perm[f * n / k..(f + 1) * n / k].to_vec())
        .collect()
}

/// k-fold cross validation of `procedure` over `grid` (the procedure's
/// default grid on the full data when `None`).
///
/// Each training fold refits the initial estimate and the whole path; the
/// selected λ minimizes the fold-averaged validation MSE, ties going to the
/// larger λ.
pub fn select_lambda_cv(
    d: &Dataset,
    procedure: &Procedure,
    grid: Option<&[f64]>,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    select_lambda_cv_cached(d, procedure, grid, k, seed, &mut InitialCache::new())
}

/// [`select_lambda_cv`] drawing full-data and per-fold initial fits from
/// `cache`, which must belong to `d`.
pub fn select_lambda_cv_cached(
    d: &Dataset,
    procedure: &Procedure,
    grid: Option<&[f64]>,
    k: usize,
    seed: u64,
    cache: &mut InitialCache,
) -> Result<CvResult> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    if d.n() < k {
        return Err(Error::InvalidInput(format!(
            "cannot form {k} folds from {} observations",
            d.n()
        )));
    }
    let initial = cache.fit(procedure, d, derive_key(seed, &[u64::MAX]))?;
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => procedure.default_grid(d, initial.as_ref(), 100),
    };
    let full_path = procedure.path(d, initial.as_ref(), &grid)?;

    let folds = make_folds(d.n(), k, seed);
    let mut totals = vec![0.0; grid.len()];
    for (f, held_out) in folds.iter().enumerate() {
        let mut mask = vec![true; d.n()];
        for &i in held_out {
            mask[i] = false;
        }
        let train_rows: Vec<usize> = (0..d.n()).filter(|&i| mask[i]).collect();
        let train = d.select_rows(&train_rows);
        let valid = d.select_rows(held_out);
        let fold_init = cache.fit(procedure, &train, derive_key(seed, &[f as u64]))?;
        let path = procedure.path(&train, fold_init.as_ref(), &grid)?;
        for (t, beta) in totals.iter_mut().zip(&path.coefficients) {
            let r = valid.y() - &valid.x().dot(beta);
            *t += r.dot(&r) / valid.n() as f64;
        }
    }
    let cv_errors: Vec<f64> = totals.into_iter().map(|t| t / k as f64).collect();
    let mut index = 0;
    for (i, &e) in cv_errors.iter().enumerate() {
        if e < cv_errors[index] {
            index = i;
        }
    }
    Ok(CvResult {
        lambda: grid[index],
        index,
        beta: full_path.coefficients[index].clone(),
        grid,
        cv_errors,
        initial,
        path: full_path,
    })
}

/// Result of searching a path for the true sign pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleChoice {
    pub lambda: Option<f64>,
    pub success: bool,
}

/// Largest λ on the path whose sign pattern equals `truth`.
pub fn select_lambda_oracle(path: &PathSolution, truth: &SignVector) -> OracleChoice {
    match path.signs.iter().position(|s| s == truth) {
        Some(i) => OracleChoice {
            lambda: Some(path.lambdas[i]),
            success: true,
        },
        None => OracleChoice {
            lambda: None,
            success: false,
        },
    }
}
