//! Reference solutions of small weighted ℓ1 problems by enumerating every
//! sign pattern. Exponential in `p`; meant for checking the solver.
//!
//! For a pattern `θ` with active set `A = {θ ≠ 0}` the only stationary point
//! is `G_AA b_A = c_A − λ w_A θ_A`. Among the patterns whose solution carries
//! its own signs, the one with the smallest objective is the global minimizer
//! whenever `G_AA` is positive definite on it.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, SymmetricMatrix};
use crate::selectors::{alasso_penalty, garrote_problem};
use crate::solver::{Constraint, Penalty, QuadraticProblem};
use crate::Dataset;

/// Largest dimension accepted (`3^p` patterns).
pub const MAX_P: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub beta: Array1<f64>,
    pub objective: f64,
    /// Sign-consistent patterns found; at least one (the zero vector).
    pub candidates: usize,
}

pub fn objective(problem: &QuadraticProblem, penalty: &Penalty, lambda: f64, b: ArrayView1<'_, f64>) -> f64 {
    problem.loss(b) + penalty.value(b, lambda)
}

/// Global minimizer of `loss(b) + λ Σ w_j |b_j|` subject to `penalty`.
pub fn solve(problem: &QuadraticProblem, penalty: &Penalty, lambda: f64) -> Result<Reference> {
    let p = problem.p();
    if p > MAX_P {
        return Err(Error::InvalidInput(format!("exhaustive search needs p <= {MAX_P}, got {p}")));
    }
    let free: Vec<usize> = (0..p).filter(|&j| penalty.weights[j].is_finite()).collect();
    let choices: &[f64] = match penalty.constraint {
        Constraint::Free => &[0.0, 1.0, -1.0],
        Constraint::NonNegative => &[0.0, 1.0],
    };
    let zero = Array1::zeros(p);
    let mut best = Reference {
        objective: objective(problem, penalty, lambda, zero.view()),
        beta: zero,
        candidates: 1,
    };
    let total = choices.len().pow(free.len() as u32);
    for code in 1..total {
        let mut theta = vec![0.0; free.len()];
        let mut c = code;
        for t in theta.iter_mut() {
            *t = choices[c % choices.len()];
            c /= choices.len();
        }
        let active: Vec<usize> = (0..free.len()).filter(|&k| theta[k] != 0.0).collect();
        let idx: Vec<usize> = active.iter().map(|&k| free[k]).collect();
        let g = SymmetricMatrix::from_gram(problem.gram.select(ndarray::Axis(0), &idx).select(ndarray::Axis(1), &idx));
        let Ok(chol) = Cholesky::factor(&g) else { continue };
        let rhs: Array1<f64> = active
            .iter()
            .zip(&idx)
            .map(|(&k, &j)| problem.xty[j] - lambda * penalty.weights[j] * theta[k])
            .collect();
        let sol = chol.solve(rhs.view());
        if !active.iter().zip(sol.iter()).all(|(&k, v)| theta[k] * v > 0.0) {
            continue;
        }
        let mut b = Array1::zeros(p);
        for (&j, &v) in idx.iter().zip(sol.iter()) {
            b[j] = v;
        }
        let obj = objective(problem, penalty, lambda, b.view());
        best.candidates += 1;
        if obj < best.objective {
            best.objective = obj;
            best.beta = b;
        }
    }
    Ok(best)
}

/// Garrote reference: shrinkage factors `d ≥ 0` on `Z = X·diag(init)`.
/// Returns the factors and the coefficients `d ∘ init`.
pub fn garrote(d: &Dataset, init: ArrayView1<'_, f64>, lambda: f64) -> Result<(Reference, Array1<f64>)> {
    let base = QuadraticProblem::from_design(d.x(), d.y());
    let (problem, penalty) = garrote_problem(&base, init);
    let r = solve(&problem, &penalty, lambda)?;
    let beta = &r.beta * &init;
    Ok((r, beta))
}

/// Adaptive Lasso reference with weights `|init_j|^−γ`.
pub fn alasso(d: &Dataset, init: ArrayView1<'_, f64>, lambda: f64, gamma: f64) -> Result<Reference> {
    let base = QuadraticProblem::from_design(d.x(), d.y());
    solve(&base, &alasso_penalty(init, gamma)?, lambda)
}
