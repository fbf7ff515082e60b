use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::ZERO_INIT_TOL;
use crate::data::Dataset;
use crate::error::Result;
use crate::initial::path_on_problem;
use crate::path::{validate_grid, PathSolution};
use crate::solver::{coordinate_descent, CdOptions, Constraint, Penalty, QuadraticProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarroteSolution {
    /// Nonnegative shrinkage factors.
    pub d: Array1<f64>,
    /// `β̂_j · d_j`.
    pub beta_ng: Array1<f64>,
    pub lambda: f64,
}

/// Problem in `d` for the design `Z = X·diag(β̂)` with `d ≥ 0`; coordinates
/// with `|β̂_j| < 1e-12` are pinned at zero.
pub fn garrote_problem(base: &QuadraticProblem, init: ArrayView1<'_, f64>) -> (QuadraticProblem, Penalty) {
    let problem = base.rescaled(init);
    let weights = init.mapv(|b| if b.abs() < ZERO_INIT_TOL { f64::INFINITY } else { 1.0 });
    (
        problem,
        Penalty {
            weights,
            constraint: Constraint::NonNegative,
        },
    )
}

/// `max_j ((1/n) z_jᵀy)₊`.
pub fn garrote_lambda_max(d: &Dataset, init: ArrayView1<'_, f64>) -> f64 {
    let c = d.x().t().dot(d.y()) / d.n() as f64;
    lambda_max_from(&c, init)
}

pub(crate) fn lambda_max_from(xty: &Array1<f64>, init: ArrayView1<'_, f64>) -> f64 {
    xty.iter()
        .zip(init.iter())
        .filter(|(_, b)| b.abs() >= ZERO_INIT_TOL)
        .map(|(c, b)| c * b)
        .fold(0.0, f64::max)
}

pub fn garrote_fit(d: &Dataset, init: ArrayView1<'_, f64>, lambda: f64) -> Result<GarroteSolution> {
    validate_grid(&[lambda])?;
    let base = QuadraticProblem::from_design(d.x(), d.y());
    let (problem, penalty) = garrote_problem(&base, init);
    let mut shrink = Array1::zeros(d.p());
    coordinate_descent(&problem, &penalty, lambda, &mut shrink, &CdOptions::default())?;
    let beta_ng = &shrink * &init;
    Ok(GarroteSolution {
        d: shrink,
        beta_ng,
        lambda,
    })
}

/// Garrote path; stored coefficients are `β̂^{NG}` (not `d`).
pub fn garrote_path(d: &Dataset, init: ArrayView1<'_, f64>, grid: &[f64]) -> Result<PathSolution> {
    let base = QuadraticProblem::from_design(d.x(), d.y());
    garrote_path_on(&base, init, grid)
}

pub(crate) fn garrote_path_on(
    base: &QuadraticProblem,
    init: ArrayView1<'_, f64>,
    grid: &[f64],
) -> Result<PathSolution> {
    validate_grid(grid)?;
    let (problem, penalty) = garrote_problem(base, init);
    let init = init.to_owned();
    path_on_problem(&problem, &penalty, grid, |shrink| shrink * &init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::orthonormal_design;
    use crate::initial::fit_ols;
    use ndarray::array;

    /// Orthonormal data whose OLS solution is exactly `target`.
    fn orthonormal_with_ols(target: &Array1<f64>, n: usize, seed: u64) -> Dataset {
        let x = orthonormal_design(n, target.len(), seed);
        let y = x.dot(target);
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn orthonormal_closed_form() {
        let d = orthonormal_with_ols(&array![2.0, 0.1], 10, 1);
        let ols = fit_ols(&d).unwrap().beta;
        let sol = garrote_fit(&d, ols.view(), 0.5).unwrap();
        assert!((sol.d[0] - 0.875).abs() < 1e-10);
        assert_eq!(sol.d[1], 0.0);
        assert!((sol.beta_ng[0] - 1.75).abs() < 1e-10);
        assert_eq!(sol.beta_ng[1], 0.0);
    }

    #[test]
    fn full_shrinkage_above_lambda_max() {
        let d = crate::fixtures::random_dataset(20, 5, 3);
        let init = fit_ols(&d).unwrap().beta;
        let lmax = garrote_lambda_max(&d, init.view());
        let sol = garrote_fit(&d, init.view(), lmax * 1.0001).unwrap();
        assert!(sol.d.iter().all(|&v| v == 0.0));
        let below = garrote_fit(&d, init.view(), lmax * 0.99).unwrap();
        assert!(below.d.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn zero_initial_coordinate_stays_zero() {
        let d = crate::fixtures::random_dataset(20, 4, 9);
        let init = array![1.0, 0.0, -0.5, 1e-13];
        for lambda in [1e-6, 1e-3, 0.1] {
            let sol = garrote_fit(&d, init.view(), lambda).unwrap();
            assert_eq!(sol.beta_ng[1], 0.0);
            assert_eq!(sol.beta_ng[3], 0.0);
        }
    }

    #[test]
    fn single_point_path_matches_fit() {
        let d = crate::fixtures::random_dataset(25, 6, 4);
        let init = fit_ols(&d).unwrap().beta;
        let path = garrote_path(&d, init.view(), &[0.05]).unwrap();
        let fit = garrote_fit(&d, init.view(), 0.05).unwrap();
        for j in 0..6 {
            assert!((path.coefficients[0][j] - fit.beta_ng[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_path_is_monotone_and_reaches_ols() {
        let target = array![3.0, -1.2, 0.4, 0.0, 2.2];
        let d = orthonormal_with_ols(&target, 30, 5);
        let ols = fit_ols(&d).unwrap().beta;
        let lmax = garrote_lambda_max(&d, ols.view());
        let grid = crate::path::log_grid(lmax * 1.1, 1e-9, 60);
        let path = garrote_path(&d, ols.view(), &grid).unwrap();
        // |β^NG_j| = |β̂_j| d_j, d_j nonincreasing in λ
        for j in 0..5 {
            for k in 1..path.len() {
                assert!(path.coefficients[k][j].abs() + 1e-12 >= path.coefficients[k - 1][j].abs());
            }
            let last = path.coefficients.last().unwrap()[j];
            assert!((last - ols[j]).abs() < 1e-6);
        }
    }
}
