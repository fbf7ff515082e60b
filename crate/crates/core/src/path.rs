use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::{sign_pattern, support_of, SignVector, SupportSet, SUPPORT_EPS};
use crate::error::{Error, Result};

/// Coefficients along a descending grid of penalty values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub lambdas: Vec<f64>,
    pub coefficients: Vec<Array1<f64>>,
    pub supports: Vec<SupportSet>,
    pub signs: Vec<SignVector>,
}

impl PathSolution {
    pub fn new() -> Self {
        PathSolution {
            lambdas: Vec::new(),
            coefficients: Vec::new(),
            supports: Vec::new(),
            signs: Vec::new(),
        }
    }

    pub fn push(&mut self, lambda: f64, beta: Array1<f64>) {
        self.supports.push(support_of(beta.view(), SUPPORT_EPS));
        self.signs.push(sign_pattern(beta.view(), SUPPORT_EPS));
        self.lambdas.push(lambda);
        self.coefficients.push(beta);
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

impl Default for PathSolution {
    fn default() -> Self {
        Self::new()
    }
}

/// Checks that `grid` is nonempty, positive and strictly descending.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("lambda grid must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidInput("lambda grid must be strictly descending".into()));
    }
    Ok(())
}

/// `points` log-spaced values from `max` down to `ratio·max`.
pub fn log_grid(max: f64, ratio: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1 && max > 0.0 && ratio > 0.0 && ratio < 1.0);
    if points == 1 {
        return vec![max];
    }
    let step = ratio.ln() / (points - 1) as f64;
    (0..points).map(|k| max * (step * k as f64).exp()).collect()
}
