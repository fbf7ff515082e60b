use ndarray::{Array1, ArrayView1};

use super::ZERO_INIT_TOL;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::initial::path_on_problem;
use crate::path::{validate_grid, PathSolution};
use crate::solver::{coordinate_descent, CdOptions, Constraint, Penalty, QuadraticProblem};

/// Weights `|β̂_j|^{−γ}`; initial zeros get infinite weight.
pub fn alasso_penalty(init: ArrayView1<'_, f64>, gamma: f64) -> Result<Penalty> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    if init.iter().all(|b| b.abs() < ZERO_INIT_TOL) {
        return Err(Error::AllWeightsInfinite);
    }
    let weights = init.mapv(|b| {
        if b.abs() < ZERO_INIT_TOL {
            f64::INFINITY
        } else {
            b.abs().powf(-gamma)
        }
    });
    Ok(Penalty {
        weights,
        constraint: Constraint::Free,
    })
}

/// `max_j |β̂_j|^γ |(1/n)x_jᵀy|`.
pub fn alasso_lambda_max(d: &Dataset, init: ArrayView1<'_, f64>, gamma: f64) -> f64 {
    let c = d.x().t().dot(d.y()) / d.n() as f64;
    lambda_max_from(&c, init, gamma)
}

pub(crate) fn lambda_max_from(xty: &Array1<f64>, init: ArrayView1<'_, f64>, gamma: f64) -> f64 {
    xty.iter()
        .zip(init.iter())
        .filter(|(_, b)| b.abs() >= ZERO_INIT_TOL)
        .map(|(c, b)| b.abs().powf(gamma) * c.abs())
        .fold(0.0, f64::max)
}

/// Weighted-ℓ1 fit `(1/2n)‖y − Xβ‖² + λ Σ |β̂_j|^{−γ}|β_j|`.
pub fn alasso_fit(d: &Dataset, init: ArrayView1<'_, f64>, lambda: f64, gamma: f64) -> Result<Array1<f64>> {
    validate_grid(&[lambda])?;
    let penalty = alasso_penalty(init, gamma)?;
    let problem = QuadraticProblem::from_design(d.x(), d.y());
    let mut b = Array1::zeros(d.p());
    coordinate_descent(&problem, &penalty, lambda, &mut b, &CdOptions::default())?;
    Ok(b)
}

pub fn alasso_path(d: &Dataset, init: ArrayView1<'_, f64>, grid: &[f64], gamma: f64) -> Result<PathSolution> {
    let base = QuadraticProblem::from_design(d.x(), d.y());
    alasso_path_on(&base, init, grid, gamma)
}

pub(crate) fn alasso_path_on(
    base: &QuadraticProblem,
    init: ArrayView1<'_, f64>,
    grid: &[f64],
    gamma: f64,
) -> Result<PathSolution> {
    validate_grid(grid)?;
    let penalty = alasso_penalty(init, gamma)?;
    path_on_problem(base, &penalty, grid, |b| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{orthonormal_design, random_dataset};
    use crate::initial::{fit_ols, lasso_path};
    use crate::numerics::soft_threshold;
    use ndarray::array;

    #[test]
    fn orthonormal_closed_form() {
        let target = array![2.0, -0.4, 0.9];
        let x = orthonormal_design(12, 3, 2);
        let d = Dataset::new(x.clone(), x.dot(&target)).unwrap();
        let ols = fit_ols(&d).unwrap().beta;
        let b = alasso_fit(&d, ols.view(), 0.5, 1.0).unwrap();
        assert!((b[0] - 1.75).abs() < 1e-10);
        for j in 0..3 {
            let expect = soft_threshold(ols[j], 0.5 / ols[j].abs());
            assert!((b[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_above_lambda_max() {
        let d = random_dataset(20, 5, 6);
        let init = fit_ols(&d).unwrap().beta;
        for gamma in [0.5, 1.0, 2.0] {
            let lmax = alasso_lambda_max(&d, init.view(), gamma);
            let b = alasso_fit(&d, init.view(), lmax * 1.0001, gamma).unwrap();
            assert!(b.iter().all(|&v| v == 0.0));
            let b = alasso_fit(&d, init.view(), lmax * 0.999, gamma).unwrap();
            assert!(b.iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn equal_weights_reduce_to_lasso() {
        let d = random_dataset(30, 6, 7).standardize().unwrap();
        let c = 2.5;
        let init = Array1::from_elem(6, c);
        let path = lasso_path(&d, &[0.2 / c, 0.05 / c]).unwrap();
        for (k, lambda) in [0.2, 0.05].into_iter().enumerate() {
            let b = alasso_fit(&d, init.view(), lambda, 1.0).unwrap();
            for j in 0..6 {
                assert!((b[j] - path.coefficients[k][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_initial_is_an_error() {
        let d = random_dataset(10, 3, 1);
        assert_eq!(
            alasso_fit(&d, Array1::zeros(3).view(), 0.1, 1.0),
            Err(Error::AllWeightsInfinite)
        );
    }

    #[test]
    fn orthonormal_supports_nested() {
        let target = array![3.0, -1.2, 0.4, 0.05, 2.2, -0.7];
        let x = orthonormal_design(40, 6, 8);
        let d = Dataset::new(x.clone(), x.dot(&target)).unwrap();
        let ols = fit_ols(&d).unwrap().beta;
        let grid = crate::path::log_grid(alasso_lambda_max(&d, ols.view(), 1.0) * 1.01, 1e-4, 40);
        let path = alasso_path(&d, ols.view(), &grid, 1.0).unwrap();
        for k in 1..path.len() {
            for &j in path.supports[k - 1].indices() {
                assert!(path.supports[k].contains(j));
            }
        }
    }
}
