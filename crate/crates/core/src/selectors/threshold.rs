use ndarray::{Array1, ArrayView1};

use super::ZERO_INIT_TOL;
use crate::path::{validate_grid, PathSolution};
use crate::error::Result;

/// Keeps `β̂_j` when `|β̂_j| ≥ λ`, zeroes it otherwise.
pub fn hard_threshold(init: ArrayView1<'_, f64>, lambda: f64) -> Array1<f64> {
    init.mapv(|b| if b.abs() >= lambda { b } else { 0.0 })
}

/// One point above `max |β̂_j|` (empty support) followed by every distinct
/// nonzero `|β̂_j|` in descending order; the last point keeps every nonzero.
pub fn hard_threshold_grid(init: ArrayView1<'_, f64>) -> Vec<f64> {
    let mut mags: Vec<f64> = init
        .iter()
        .map(|b| b.abs())
        .filter(|&m| m >= ZERO_INIT_TOL)
        .collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.dedup();
    let top = mags.first().map_or(1.0, |m| m * 2.0);
    let mut grid = Vec::with_capacity(mags.len() + 1);
    grid.push(top);
    grid.extend(mags);
    grid
}

pub fn hard_threshold_path(init: ArrayView1<'_, f64>, grid: &[f64]) -> Result<PathSolution> {
    validate_grid(grid)?;
    let mut path = PathSolution::new();
    for &lambda in grid {
        path.push(lambda, hard_threshold(init, lambda));
    }
    Ok(path)
}
