//! Test error as a function of model size over random train/test splits.
//!
//! For each target size `k` the path point whose support size is nearest `k`
//! is used as is (no refit); ties go to the smaller λ.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::path::PathSolution;
use crate::rng::{derive_key, stream};
use crate::selectors::Procedure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub methods: Vec<Procedure>,
    pub splits: usize,
    pub train_size: usize,
    /// Sizes `1..=max_sparsity` are reported.
    pub max_sparsity: usize,
    pub grid_points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sparsity: usize,
    pub method: String,
    pub mean_mse: f64,
    /// Mean support size of the chosen path points.
    pub mean_size: f64,
    pub splits: usize,
}

/// Index of the path point with support size nearest `k`, preferring the
/// later (smaller λ) point on ties.
pub fn nearest_size(path: &PathSolution, k: usize) -> usize {
    let mut best = 0;
    for (i, s) in path.supports.iter().enumerate() {
        if s.len().abs_diff(k) <= path.supports[best].len().abs_diff(k) {
            best = i;
        }
    }
    best
}

pub fn sparsity_sweep(d: &Dataset, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let n = d.n();
    if cfg.train_size < 3 || cfg.train_size >= n {
        return Err(Error::InvalidInput(format!(
            "train size {} must be in [3, {})",
            cfg.train_size, n
        )));
    }
    if cfg.splits == 0 || cfg.max_sparsity == 0 || cfg.methods.is_empty() {
        return Err(Error::InvalidInput("splits, sizes and methods must be nonempty".into()));
    }
    // [split][method][size] -> (mse, size)
    let per_split: Vec<Vec<Vec<(f64, usize)>>> = (0..cfg.splits)
        .into_par_iter()
        .map(|split| {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut stream(cfg.seed, &[split as u64]));
            let train = d.select_rows(&rows[..cfg.train_size]).standardize()?;
            let test = d.select_rows(&rows[cfg.train_size..]);
            let st = train.standardization().expect("standardized").clone();
            cfg.methods
                .iter()
                .enumerate()
                .map(|(m, proc)| {
                    let seed = derive_key(cfg.seed, &[split as u64, m as u64]);
                    let (_, path) = proc.fit_path(&train, seed, cfg.grid_points)?;
                    Ok((1..=cfg.max_sparsity)
                        .map(|k| {
                            let i = nearest_size(&path, k);
                            let (b0, beta) = st.to_original(path.coefficients[i].view());
                            let r = test.y() - &(test.x().dot(&beta) + b0);
                            (r.dot(&r) / test.n() as f64, path.supports[i].len())
                        })
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for k in 0..cfg.max_sparsity {
        for (m, proc) in cfg.methods.iter().enumerate() {
            let (mse, size) = per_split
                .iter()
                .map(|s| s[m][k])
                .fold((0.0, 0.0), |(a, b), (e, z)| (a + e, b + z as f64));
            out.push(SweepRow {
                sparsity: k + 1,
                method: proc.to_string(),
                mean_mse: mse / cfg.splits as f64,
                mean_size: size / cfg.splits as f64,
                splits: cfg.splits,
            });
        }
    }
    Ok(out)
}
