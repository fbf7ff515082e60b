use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::alasso::{self, alasso_path_on};
use super::cv::select_lambda_cv;
use super::garrote::{self, garrote_path_on};
use super::threshold::{hard_threshold_grid, hard_threshold_path};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::initial::{
    default_lambda_grid, default_ridge_grid, fit_ols, fit_ridge, fit_univariate, path_on_problem,
    select_ridge_gcv, InitialEstimate, InitialMethod,
};
use crate::path::{log_grid, PathSolution};
use crate::solver::{coordinate_descent, kkt_violation, CdOptions, Penalty, QuadraticProblem};

/// How the first-stage estimate is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Ols,
    Univariate,
    /// Fixed `nu`, or GCV over the default grid when absent.
    Ridge { nu: Option<f64> },
    /// Fixed `lambda`, or `folds`-fold cross validation over the default grid.
    Lasso { lambda: Option<f64>, folds: usize },
    Fixed { beta: Vec<f64> },
}

impl InitialSpec {
    pub fn ridge_gcv() -> Self {
        InitialSpec::Ridge { nu: None }
    }

    pub fn lasso_cv() -> Self {
        InitialSpec::Lasso {
            lambda: None,
            folds: 5,
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            InitialSpec::Ols => "OLS",
            InitialSpec::Univariate => "Univ",
            InitialSpec::Ridge { .. } => "Ridge",
            InitialSpec::Lasso { .. } => "Lasso",
            InitialSpec::Fixed { .. } => "Fixed",
        }
    }

    /// Computes the estimate on `d`; `seed` drives any internal cross validation.
    pub fn fit(&self, d: &Dataset, seed: u64) -> Result<InitialEstimate> {
        match self {
            InitialSpec::Ols => fit_ols(d),
            InitialSpec::Univariate => Ok(fit_univariate(d)),
            InitialSpec::Ridge { nu: Some(nu) } => fit_ridge(d, *nu),
            InitialSpec::Ridge { nu: None } => Ok(select_ridge_gcv(d, &default_ridge_grid())?.1),
            InitialSpec::Lasso {
                lambda: Some(lambda),
                ..
            } => crate::initial::fit_lasso(d, *lambda),
            InitialSpec::Lasso { lambda: None, folds } => {
                let cv = select_lambda_cv(d, &Procedure::Lasso, None, *folds, seed)?;
                Ok(InitialEstimate {
                    beta: cv.beta,
                    method: InitialMethod::Lasso,
                    tuning: Some(cv.lambda),
                    info: crate::initial::FitInfo {
                        cv_error: Some(cv.cv_errors[cv.index]),
                        ..Default::default()
                    },
                })
            }
            InitialSpec::Fixed { beta } => {
                if beta.len() != d.p() {
                    return Err(Error::DimensionMismatch(format!(
                        "fixed initial estimate has {} entries, design has {} columns",
                        beta.len(),
                        d.p()
                    )));
                }
                Ok(InitialEstimate::fixed(Array1::from(beta.clone())))
            }
        }
    }
}

/// A fit at one λ with its optimality report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFit {
    pub lambda: f64,
    pub beta: Array1<f64>,
    /// Penalized objective in the coordinates the method optimizes over
    /// (shrinkage factors for the garrote); `None` for hard thresholding.
    pub objective: Option<f64>,
    /// Largest violation of the optimality conditions; 0 for hard thresholding.
    pub kkt_residual: f64,
}

/// A complete selection procedure: the plain Lasso or a two-step method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Procedure {
    Lasso,
    Garrote { initial: InitialSpec },
    AdaptiveLasso { initial: InitialSpec, gamma: f64 },
    HardThreshold { initial: InitialSpec },
}

impl Procedure {
    pub fn initial(&self) -> Option<&InitialSpec> {
        match self {
            Procedure::Lasso => None,
            Procedure::Garrote { initial }
            | Procedure::AdaptiveLasso { initial, .. }
            | Procedure::HardThreshold { initial } => Some(initial),
        }
    }

    pub fn fit_initial(&self, d: &Dataset, seed: u64) -> Result<Option<InitialEstimate>> {
        self.initial().map(|spec| spec.fit(d, seed)).transpose()
    }

    /// Smallest λ at which the procedure returns the zero vector.
    pub fn lambda_max(&self, d: &Dataset, init: Option<&InitialEstimate>) -> f64 {
        let c = d.x().t().dot(d.y()) / d.n() as f64;
        match (self, init) {
            (Procedure::Lasso, _) => c.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            (Procedure::Garrote { .. }, Some(i)) => garrote::lambda_max_from(&c, i.beta.view()),
            (Procedure::AdaptiveLasso { gamma, .. }, Some(i)) => {
                alasso::lambda_max_from(&c, i.beta.view(), *gamma)
            }
            (Procedure::HardThreshold { .. }, Some(i)) => {
                i.beta.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * (1.0 + 1e-12)
            }
            _ => panic!("two-step procedures need an initial estimate"),
        }
    }

    /// Default grid: `points` log-spaced values from the method's λ_max down
    /// to `1e-3·λ_max`; the exact breakpoint grid for hard thresholding.
    pub fn default_grid(&self, d: &Dataset, init: Option<&InitialEstimate>, points: usize) -> Vec<f64> {
        if let (Procedure::HardThreshold { .. }, Some(i)) = (self, init) {
            return hard_threshold_grid(i.beta.view());
        }
        let lmax = self.lambda_max(d, init);
        if lmax > 0.0 {
            if points == 100 {
                default_lambda_grid(lmax)
            } else {
                log_grid(lmax, 1e-3, points)
            }
        } else {
            log_grid(1.0, 1e-3, points)
        }
    }

    pub fn path(&self, d: &Dataset, init: Option<&InitialEstimate>, grid: &[f64]) -> Result<PathSolution> {
        if let (Procedure::HardThreshold { .. }, Some(i)) = (self, init) {
            return hard_threshold_path(i.beta.view(), grid);
        }
        let base = QuadraticProblem::from_design(d.x(), d.y());
        self.path_on(&base, init, grid)
    }

    /// Path on a precomputed quadratic form of `d`.
    pub fn path_on(
        &self,
        base: &QuadraticProblem,
        init: Option<&InitialEstimate>,
        grid: &[f64],
    ) -> Result<PathSolution> {
        crate::path::validate_grid(grid)?;
        match (self, init) {
            (Procedure::Lasso, _) => path_on_problem(base, &Penalty::lasso(base.p()), grid, |b| b),
            (Procedure::Garrote { .. }, Some(i)) => garrote_path_on(base, i.beta.view(), grid),
            (Procedure::AdaptiveLasso { gamma, .. }, Some(i)) => {
                // a zero first stage screens out every variable
                if i.beta.iter().all(|b| b.abs() < super::ZERO_INIT_TOL) {
                    let mut path = PathSolution::new();
                    for &lambda in grid {
                        path.push(lambda, Array1::zeros(base.p()));
                    }
                    return Ok(path);
                }
                alasso_path_on(base, i.beta.view(), grid, *gamma)
            }
            (Procedure::HardThreshold { .. }, Some(i)) => hard_threshold_path(i.beta.view(), grid),
            _ => Err(Error::InvalidInput(
                "two-step procedures need an initial estimate".into(),
            )),
        }
    }

    /// Solves the second step at a single `lambda`.
    pub fn fit_at(&self, d: &Dataset, init: Option<&InitialEstimate>, lambda: f64) -> Result<PointFit> {
        crate::path::validate_grid(&[lambda])?;
        let base = QuadraticProblem::from_design(d.x(), d.y());
        let solve = |problem: &QuadraticProblem, penalty: &Penalty| -> Result<(Array1<f64>, f64, f64)> {
            let mut b = Array1::zeros(problem.p());
            coordinate_descent(problem, penalty, lambda, &mut b, &CdOptions::default())?;
            let objective = problem.loss(b.view()) + penalty.value(b.view(), lambda);
            let kkt = kkt_violation(problem, penalty, lambda, b.view());
            Ok((b, objective, kkt))
        };
        let (beta, objective, kkt_residual) = match (self, init) {
            (Procedure::Lasso, _) => {
                let (b, obj, kkt) = solve(&base, &Penalty::lasso(base.p()))?;
                (b, Some(obj), kkt)
            }
            (Procedure::Garrote { .. }, Some(i)) => {
                let (problem, penalty) = garrote::garrote_problem(&base, i.beta.view());
                let (shrink, obj, kkt) = solve(&problem, &penalty)?;
                (&shrink * &i.beta, Some(obj), kkt)
            }
            (Procedure::AdaptiveLasso { gamma, .. }, Some(i)) => {
                let (b, obj, kkt) = solve(&base, &alasso::alasso_penalty(i.beta.view(), *gamma)?)?;
                (b, Some(obj), kkt)
            }
            (Procedure::HardThreshold { .. }, Some(i)) => (super::hard_threshold(i.beta.view(), lambda), None, 0.0),
            _ => {
                return Err(Error::InvalidInput(
                    "two-step procedures need an initial estimate".into(),
                ))
            }
        };
        Ok(PointFit {
            lambda,
            beta,
            objective,
            kkt_residual,
        })
    }

    /// Fits the initial estimate and the default-grid path on `d`.
    pub fn fit_path(&self, d: &Dataset, seed: u64, points: usize) -> Result<(Option<InitialEstimate>, PathSolution)> {
        let init = self.fit_initial(d, seed)?;
        let grid = self.default_grid(d, init.as_ref(), points);
        let path = self.path(d, init.as_ref(), &grid)?;
        Ok((init, path))
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procedure::Lasso => f.write_str("Lasso"),
            Procedure::Garrote { initial } => write!(f, "NG-{}", initial.short_name()),
            Procedure::AdaptiveLasso { initial, gamma } => {
                if *gamma == 1.0 {
                    write!(f, "ALasso-{}", initial.short_name())
                } else {
                    write!(f, "ALasso{gamma}-{}", initial.short_name())
                }
            }
            Procedure::HardThreshold { initial } => write!(f, "HT-{}", initial.short_name()),
        }
    }
}

impl FromStr for Procedure {
    type Err = Error;

    /// Parses labels such as `Lasso`, `NG-Ridge`, `ALasso-Univ`, `HT-OLS`.
    /// Ridge initial estimates use GCV and Lasso initial estimates use 5-fold
    /// cross validation.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("lasso") {
            return Ok(Procedure::Lasso);
        }
        let (step, init) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))?;
        let initial = match init.to_ascii_lowercase().as_str() {
            "ols" => InitialSpec::Ols,
            "univ" | "univariate" => InitialSpec::Univariate,
            "ridge" => InitialSpec::ridge_gcv(),
            "lasso" => InitialSpec::lasso_cv(),
            _ => return Err(Error::InvalidInput(format!("unknown initial estimator in '{s}'"))),
        };
        match step.to_ascii_lowercase().as_str() {
            "ng" | "garrote" => Ok(Procedure::Garrote { initial }),
            "alasso" => Ok(Procedure::AdaptiveLasso { initial, gamma: 1.0 }),
            "ht" => Ok(Procedure::HardThreshold { initial }),
            _ => Err(Error::InvalidInput(format!("unknown second step in '{s}'"))),
        }
    }
}
