//! First-stage estimators: OLS, marginal (univariate) regression, Ridge with a
//! GCV-selected penalty, and the Lasso path.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{eigh, gram, Cholesky, SymmetricMatrix, DEFAULT_RANK_TOL};
use crate::path::{log_grid, validate_grid, PathSolution};
use crate::solver::{coordinate_descent, CdOptions, Penalty, QuadraticProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialMethod {
    Ols,
    Univariate,
    Ridge,
    Lasso,
    /// Supplied by the caller.
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub gcv: Option<f64>,
    pub cv_error: Option<f64>,
    pub sweeps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialEstimate {
    pub beta: Array1<f64>,
    pub method: InitialMethod,
    /// ν for Ridge, λ for Lasso.
    pub tuning: Option<f64>,
    pub info: FitInfo,
}

impl InitialEstimate {
    pub fn fixed(beta: Array1<f64>) -> Self {
        InitialEstimate {
            beta,
            method: InitialMethod::Fixed,
            tuning: None,
            info: FitInfo::default(),
        }
    }
}

/// Ordinary least squares. Requires `p ≤ n` and an invertible Gram matrix.
pub fn fit_ols(d: &Dataset) -> Result<InitialEstimate> {
    if d.p() > d.n() {
        return Err(Error::SingularMatrix {
            index: d.n(),
            pivot: 0.0,
        });
    }
    let g = gram(d.x().view());
    let c = d.x().t().dot(d.y()) / d.n() as f64;
    let beta = Cholesky::factor(&g)?.solve(c.view());
    Ok(InitialEstimate {
        beta,
        method: InitialMethod::Ols,
        tuning: None,
        info: FitInfo::default(),
    })
}

/// Marginal regression slopes `(1/n) Xᵀy`; these are the per-column
/// regression coefficients when the columns are standardized.
pub fn fit_univariate(d: &Dataset) -> InitialEstimate {
    InitialEstimate {
        beta: d.x().t().dot(d.y()) / d.n() as f64,
        method: InitialMethod::Univariate,
        tuning: None,
        info: FitInfo::default(),
    }
}

/// Ridge solution `((1/n)XᵀX + νI)⁻¹ (1/n)Xᵀy`.
///
/// Uses the `n×n` kernel form `Xᵀ(XXᵀ/n + νI)⁻¹ y / n` when `p > n`.
pub fn fit_ridge(d: &Dataset, nu: f64) -> Result<InitialEstimate> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!("ridge penalty must be positive, got {nu}")));
    }
    let n = d.n() as f64;
    let x = d.x();
    let beta = if d.p() <= d.n() {
        let mut a = x.t().dot(x) / n;
        a.diag_mut().mapv_inplace(|v| v + nu);
        let c = x.t().dot(d.y()) / n;
        Cholesky::factor(&SymmetricMatrix::from_gram(a))?.solve(c.view())
    } else {
        let mut k = x.dot(&x.t()) / n;
        k.diag_mut().mapv_inplace(|v| v + nu);
        let alpha = Cholesky::factor(&SymmetricMatrix::from_gram(k))?.solve(d.y().view());
        x.t().dot(&alpha) / n
    };
    Ok(InitialEstimate {
        beta,
        method: InitialMethod::Ridge,
        tuning: Some(nu),
        info: FitInfo::default(),
    })
}

/// 50 log-spaced values in `[1e-4, 1e2]`.
pub fn default_ridge_grid() -> Vec<f64> {
    let mut g = log_grid(1e2, 1e-6, 50);
    g.reverse();
    g
}

/// Spectral form of the ridge problem, reused across many `ν`.
struct RidgeSpectrum {
    eigenvalues: Array1<f64>,
    /// `p ≤ n`: eigenvectors of `(1/n)XᵀX` and `u = Eᵀ(1/n)Xᵀy`.
    /// `p > n`: eigenvectors of `(1/n)XXᵀ` and `u = Vᵀy`.
    vectors: Array2<f64>,
    u: Array1<f64>,
    primal: bool,
}

impl RidgeSpectrum {
    fn new(d: &Dataset) -> Result<Self> {
        let n = d.n() as f64;
        let x = d.x();
        if d.p() <= d.n() {
            let e = eigh(&gram(x.view()), DEFAULT_RANK_TOL)?;
            let c = x.t().dot(d.y()) / n;
            let u = e.eigenvectors.t().dot(&c);
            Ok(RidgeSpectrum {
                eigenvalues: e.eigenvalues.mapv(|v| v.max(0.0)),
                vectors: e.eigenvectors,
                u,
                primal: true,
            })
        } else {
            let k = SymmetricMatrix::from_gram(x.dot(&x.t()) / n);
            let e = eigh(&k, DEFAULT_RANK_TOL)?;
            let u = e.eigenvectors.t().dot(d.y());
            Ok(RidgeSpectrum {
                eigenvalues: e.eigenvalues.mapv(|v| v.max(0.0)),
                vectors: e.eigenvectors,
                u,
                primal: false,
            })
        }
    }

    fn trace_hat(&self, nu: f64) -> f64 {
        self.eigenvalues.iter().map(|&l| l / (l + nu)).sum()
    }

    /// `(1/n)‖y − Xβ̂(ν)‖²`.
    fn mean_rss(&self, d: &Dataset, nu: f64) -> f64 {
        let n = d.n() as f64;
        if self.primal {
            let scaled: Array1<f64> = self
                .u
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(u, l)| u / (l + nu))
                .collect();
            let beta = self.vectors.dot(&scaled);
            let r = d.y() - &d.x().dot(&beta);
            r.dot(&r) / n
        } else {
            self.u
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(w, l)| {
                    let f = nu / (l + nu);
                    f * f * w * w
                })
                .sum::<f64>()
                / n
        }
    }
}

/// GCV score `(1/n)‖y − Xβ̂(ν)‖² / (1 − tr H(ν)/n)²`; `None` when
/// `tr H(ν)/n ≥ 1`.
pub fn gcv_score(d: &Dataset, nu: f64) -> Result<Option<f64>> {
    let spec = RidgeSpectrum::new(d)?;
    Ok(gcv_from_spectrum(&spec, d, nu))
}

fn gcv_from_spectrum(spec: &RidgeSpectrum, d: &Dataset, nu: f64) -> Option<f64> {
    let n = d.n() as f64;
    let frac = spec.trace_hat(nu) / n;
    if frac >= 1.0 {
        return None;
    }
    Some(spec.mean_rss(d, nu) / ((1.0 - frac) * (1.0 - frac)))
}

/// Picks `ν` on `grid` minimizing GCV, ties toward larger `ν`.
pub fn select_ridge_gcv(d: &Dataset, grid: &[f64]) -> Result<(f64, InitialEstimate)> {
    if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("ridge grid must be nonempty and positive".into()));
    }
    let spec = RidgeSpectrum::new(d)?;
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<(f64, f64)> = None;
    for &nu in &order {
        if let Some(score) = gcv_from_spectrum(&spec, d, nu) {
            match best {
                Some((_, s)) if !(score < s) => {}
                _ => best = Some((nu, score)),
            }
        }
    }
    let (nu, score) = best.ok_or(Error::DegenerateGcv)?;
    let mut est = fit_ridge(d, nu)?;
    est.info.gcv = Some(score);
    Ok((nu, est))
}

/// `‖(1/n)Xᵀy‖_∞`, the smallest penalty with an all-zero Lasso solution.
pub fn lasso_lambda_max(d: &Dataset) -> f64 {
    let c = d.x().t().dot(d.y()) / d.n() as f64;
    c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// 100 log-spaced values from `lambda_max` down to `1e-3·lambda_max`.
pub fn default_lambda_grid(lambda_max: f64) -> Vec<f64> {
    log_grid(lambda_max, 1e-3, 100)
}

/// Warm-started Lasso path by cyclic coordinate descent.
pub fn lasso_path(d: &Dataset, grid: &[f64]) -> Result<PathSolution> {
    validate_grid(grid)?;
    let problem = QuadraticProblem::from_design(d.x(), d.y());
    path_on_problem(&problem, &Penalty::lasso(d.p()), grid, |b| b)
}

/// Lasso at a single `λ`.
pub fn fit_lasso(d: &Dataset, lambda: f64) -> Result<InitialEstimate> {
    let path = lasso_path(d, &[lambda])?;
    Ok(InitialEstimate {
        beta: path.coefficients.into_iter().next().expect("one point"),
        method: InitialMethod::Lasso,
        tuning: Some(lambda),
        info: FitInfo::default(),
    })
}

/// Runs coordinate descent along `grid`, mapping each solution through
/// `finish` before storing it.
pub(crate) fn path_on_problem(
    problem: &QuadraticProblem,
    penalty: &Penalty,
    grid: &[f64],
    finish: impl Fn(Array1<f64>) -> Array1<f64>,
) -> Result<PathSolution> {
    let mut b = Array1::zeros(problem.p());
    let mut path = PathSolution::new();
    let opts = CdOptions::default();
    for &lambda in grid {
        coordinate_descent(problem, penalty, lambda, &mut b, &opts)?;
        path.push(lambda, finish(b.clone()));
    }
    Ok(path)
}
