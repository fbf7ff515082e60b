//! Coordinate descent for weighted-ℓ1 penalized least squares in Gram form.
//!
//! Every estimator in the crate reduces to
//!
//! ```text
//! minimize  ½ bᵀ G b − cᵀ b + λ Σ_j w_j |b_j|     (optionally b ≥ 0)
//! ```
//!
//! with `G = (1/n) AᵀA` and `c = (1/n) Aᵀy` for some design `A` (the
//! standardized `X` for the Lasso and adaptive Lasso, `Z = X·diag(β̂)` for
//! the garrote). Adding `(1/2n)‖y‖²` gives the usual `(1/2n)‖y − Ab‖²` loss.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::numerics::{eigh, Cholesky, SymmetricMatrix};

/// Convergence threshold on the largest coefficient change in a sweep.
pub const CD_TOL: f64 = 1e-8;

/// Sweeps allowed per unit of dimension.
pub const SWEEPS_PER_COORDINATE: usize = 100;

/// Active-set sweeps between attempts at the exact solve on the current
/// support; this rescues slow linear convergence on collinear columns.
const POLISH_EVERY: usize = 10;

/// Sweeps before the active-set method is tried on a slow descent.
const EXACT_AFTER: usize = 50;

/// Relative eigenvalue below which an active Gram block counts as singular.
const NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Free,
    NonNegative,
}

/// Quadratic part of the problem.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    /// `(1/n)‖y‖²`.
    pub yty: f64,
}

impl QuadraticProblem {
    pub fn from_design(x: &Array2<f64>, y: &Array1<f64>) -> Self {
        let n = x.nrows() as f64;
        let g = x.t().dot(x) / n;
        let gram = SymmetricMatrix::from_gram(g).into_inner();
        QuadraticProblem {
            gram,
            xty: x.t().dot(y) / n,
            yty: y.dot(y) / n,
        }
    }

    /// Problem for the column-rescaled design `A·diag(scale)`.
    pub fn rescaled(&self, scale: ArrayView1<'_, f64>) -> Self {
        let p = self.p();
        let mut gram = self.gram.clone();
        for i in 0..p {
            for j in 0..p {
                gram[[i, j]] *= scale[i] * scale[j];
            }
        }
        QuadraticProblem {
            gram,
            xty: &self.xty * &scale,
            yty: self.yty,
        }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    /// `c − G b`, i.e. `(1/n) Aᵀ(y − A b)`.
    pub fn gradient(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        &self.xty - &self.gram.dot(&b)
    }

    /// `(1/2n)‖y − A b‖²`.
    pub fn loss(&self, b: ArrayView1<'_, f64>) -> f64 {
        0.5 * b.dot(&self.gram.dot(&b)) - self.xty.dot(&b) + 0.5 * self.yty
    }
}

/// Penalty weights and constraint. `f64::INFINITY` weights pin a coordinate
/// at zero.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub weights: Array1<f64>,
    pub constraint: Constraint,
}

impl Penalty {
    pub fn lasso(p: usize) -> Self {
        Penalty {
            weights: Array1::ones(p),
            constraint: Constraint::Free,
        }
    }

    pub fn value(&self, b: ArrayView1<'_, f64>, lambda: f64) -> f64 {
        lambda
            * b.iter()
                .zip(self.weights.iter())
                .filter(|(v, _)| **v != 0.0)
                .map(|(v, w)| w * v.abs())
                .sum::<f64>()
    }

    fn excluded(&self, j: usize, gram_jj: f64) -> bool {
        !self.weights[j].is_finite() || !(gram_jj > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOptions {
    pub tol: f64,
    /// Defaults to `100·p` when `None`.
    pub max_sweeps: Option<usize>,
    /// Allow exact solves on the active set: after convergence, when the
    /// support stalls, and as a fallback once the sweep cap is hit.
    pub polish: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            tol: CD_TOL,
            max_sweeps: None,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOutcome {
    pub sweeps: usize,
    pub polished: bool,
}

/// Minimizes the penalized objective from the warm start held in `b`.
pub fn coordinate_descent(
    problem: &QuadraticProblem,
    penalty: &Penalty,
    lambda: f64,
    b: &mut Array1<f64>,
    opts: &CdOptions,
) -> Result<CdOutcome> {
    let p = problem.p();
    assert_eq!(b.len(), p);
    assert_eq!(penalty.weights.len(), p);
    let g = &problem.gram;
    for j in 0..p {
        if penalty.excluded(j, g[[j, j]]) {
            b[j] = 0.0;
        }
    }
    let mut grad = problem.gradient(b.view());
    let max_sweeps = opts.max_sweeps.unwrap_or(SWEEPS_PER_COORDINATE * p.max(1));

    let update = |j: usize, b: &mut Array1<f64>, grad: &mut Array1<f64>| -> f64 {
        let gjj = g[[j, j]];
        if penalty.excluded(j, gjj) {
            return 0.0;
        }
        let z = grad[j] + gjj * b[j];
        let t = lambda * penalty.weights[j];
        let new = match penalty.constraint {
            Constraint::Free => crate::numerics::soft_threshold(z, t) / gjj,
            Constraint::NonNegative => (z - t).max(0.0) / gjj,
        };
        let delta = new - b[j];
        if delta != 0.0 {
            b[j] = new;
            grad.scaled_add(-delta, &g.column(j));
        }
        delta.abs()
    };

    let mut sweeps = 0;
    let mut last_support: Vec<bool> = Vec::new();
    let mut next_exact = EXACT_AFTER;
    // exact finish once descent is slow; failed attempts back off
    let mut try_exact = |b: &mut Array1<f64>, sweeps: usize| -> bool {
        if !opts.polish {
            return false;
        }
        if polish(problem, penalty, lambda, b) {
            return true;
        }
        if sweeps < next_exact {
            return false;
        }
        next_exact = 2 * sweeps;
        let mut candidate = b.clone();
        if feature_sign(problem, penalty, lambda, &mut candidate) {
            *b = candidate;
            return true;
        }
        false
    };
    loop {
        // full pass
        let mut max_change = 0.0_f64;
        for j in 0..p {
            max_change = max_change.max(update(j, b, &mut grad));
        }
        sweeps += 1;
        if max_change < opts.tol {
            break;
        }
        // a support that survives a full pass is usually final; solving it
        // exactly avoids slow convergence on ill-conditioned designs
        let support: Vec<bool> = b.iter().map(|v| *v != 0.0).collect();
        if support == last_support && try_exact(b, sweeps) {
            return Ok(CdOutcome { sweeps, polished: true });
        }
        last_support = support;
        if sweeps >= max_sweeps {
            return active_set_fallback(problem, penalty, lambda, b, sweeps, opts.polish);
        }
        // iterate on the active set until it settles
        let active: Vec<usize> = (0..p).filter(|&j| b[j] != 0.0).collect();
        let mut inner = 0;
        loop {
            let mut change = 0.0_f64;
            for &j in &active {
                change = change.max(update(j, b, &mut grad));
            }
            sweeps += 1;
            inner += 1;
            if change < opts.tol {
                break;
            }
            if inner % POLISH_EVERY == 0 && try_exact(b, sweeps) {
                return Ok(CdOutcome { sweeps, polished: true });
            }
            if sweeps >= max_sweeps {
                return active_set_fallback(problem, penalty, lambda, b, sweeps, opts.polish);
            }
        }
    }

    let polished = opts.polish && polish(problem, penalty, lambda, b);
    Ok(CdOutcome { sweeps, polished })
}

/// Replaces `b` with the exact stationary point on its current support and
/// sign pattern when that point is still optimal.
fn polish(problem: &QuadraticProblem, penalty: &Penalty, lambda: f64, b: &mut Array1<f64>) -> bool {
    let active: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
    if active.is_empty() {
        return false;
    }
    let signs: Vec<f64> = active.iter().map(|&j| b[j].signum()).collect();
    let sub = SymmetricMatrix::from_gram(
        problem
            .gram
            .select(ndarray::Axis(0), &active)
            .select(ndarray::Axis(1), &active),
    );
    let Ok(chol) = Cholesky::factor(&sub) else {
        return false;
    };
    let rhs: Array1<f64> = active
        .iter()
        .zip(&signs)
        .map(|(&j, s)| problem.xty[j] - lambda * penalty.weights[j] * s)
        .collect();
    let sol = chol.solve(rhs.view());
    if sol.iter().zip(&signs).any(|(v, s)| v * s <= 0.0) {
        return false;
    }
    let mut candidate = Array1::zeros(b.len());
    for (k, &j) in active.iter().enumerate() {
        candidate[j] = sol[k];
    }
    if kkt_violation(problem, penalty, lambda, candidate.view()) > 1e-9 * (1.0 + lambda) {
        return false;
    }
    // only accept if it does not worsen the objective
    let obj = |v: ArrayView1<'_, f64>| problem.loss(v) + penalty.value(v, lambda);
    if obj(candidate.view()) > obj(b.view()) + 1e-14 * (1.0 + obj(b.view()).abs()) {
        return false;
    }
    *b = candidate;
    true
}

/// Finishes a stalled descent with a sign-constrained active-set method
/// started from the current iterate. Each step solves the problem exactly on
/// the active set and never increases the objective.
fn active_set_fallback(
    problem: &QuadraticProblem,
    penalty: &Penalty,
    lambda: f64,
    b: &mut Array1<f64>,
    sweeps: usize,
    enabled: bool,
) -> Result<CdOutcome> {
    if enabled && feature_sign(problem, penalty, lambda, b) {
        Ok(CdOutcome { sweeps, polished: true })
    } else {
        Err(Error::MaxIterations { lambda, sweeps })
    }
}

fn feature_sign(problem: &QuadraticProblem, penalty: &Penalty, lambda: f64, b: &mut Array1<f64>) -> bool {
    let p = b.len();
    let g = &problem.gram;
    let tol = 1e-9 * (1.0 + lambda);
    let obj = |v: ArrayView1<'_, f64>| problem.loss(v) + penalty.value(v, lambda);
    let mut theta: Vec<f64> = b.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
    for _ in 0..(50 * p + 100) {
        let active: Vec<usize> = (0..p).filter(|&j| theta[j] != 0.0).collect();
        if !active.is_empty() {
            let sub = SymmetricMatrix::from_gram(g.select(ndarray::Axis(0), &active).select(ndarray::Axis(1), &active));
            let Ok(chol) = Cholesky::factor(&sub) else {
                let Some(zeroed) = null_step(problem, penalty, lambda, b, &theta, &active, &sub) else {
                    return false;
                };
                theta[zeroed] = 0.0;
                for &j in &active {
                    if b[j] != 0.0 {
                        theta[j] = b[j].signum();
                    }
                }
                continue;
            };
            let rhs: Array1<f64> = active
                .iter()
                .map(|&j| problem.xty[j] - lambda * penalty.weights[j] * theta[j])
                .collect();
            let target = chol.solve(rhs.view());
            // candidate stops: the target and every sign crossing on the way
            let mut stops = vec![1.0];
            for (k, &j) in active.iter().enumerate() {
                if target[k] * theta[j] <= 0.0 && b[j] != 0.0 {
                    stops.push(b[j] / (b[j] - target[k]));
                }
            }
            let at = |t: f64| {
                let mut v = b.clone();
                for (k, &j) in active.iter().enumerate() {
                    let x = b[j] + t * (target[k] - b[j]);
                    // never cross the sign chosen for the coordinate
                    v[j] = if x * theta[j] > 0.0 { x } else { 0.0 };
                }
                v
            };
            let current = obj(b.view());
            let (best_t, best) = stops
                .iter()
                .map(|&t| {
                    let v = at(t);
                    (t, obj(v.view()), v)
                })
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(t, _, v)| (t, v))
                .expect("nonempty");
            let consistent = best_t == 1.0 && active.iter().all(|&j| best[j] != 0.0);
            if obj(best.view()) > current + 1e-14 * (1.0 + current.abs()) {
                return false;
            }
            *b = best;
            for j in 0..p {
                theta[j] = if b[j] == 0.0 { 0.0 } else { b[j].signum() };
            }
            if !consistent {
                continue;
            }
        }
        // optimal on the active set; admit the worst violator among zeros
        let grad = problem.gradient(b.view());
        let mut worst = (tol, None);
        for j in 0..p {
            if b[j] != 0.0 || penalty.excluded(j, g[[j, j]]) {
                continue;
            }
            let t = lambda * penalty.weights[j];
            let v = match penalty.constraint {
                Constraint::Free => grad[j].abs() - t,
                Constraint::NonNegative => grad[j] - t,
            };
            if v > worst.0 {
                worst = (v, Some(j));
            }
        }
        match worst.1 {
            Some(j) => theta[j] = grad[j].signum(),
            None => return kkt_violation(problem, penalty, lambda, b.view()) <= tol,
        }
    }
    false
}

/// Moves along a null direction of a singular active Gram block until one
/// coordinate reaches zero and returns it. The objective is linear along that direction and
/// the sign is chosen so it does not increase.
fn null_step(
    problem: &QuadraticProblem,
    penalty: &Penalty,
    lambda: f64,
    b: &mut Array1<f64>,
    theta: &[f64],
    active: &[usize],
    sub: &SymmetricMatrix,
) -> Option<usize> {
    let eig = eigh(sub, NULL_TOL).ok()?;
    if eig.rank == active.len() {
        return None;
    }
    let mut u = eig.eigenvectors.column(active.len() - 1).to_owned();
    // the loss is linear along u with slope −gradᵀu
    let grad = problem.gradient(b.view());
    let slope: f64 = active
        .iter()
        .zip(&u)
        .map(|(&j, uk)| (lambda * penalty.weights[j] * theta[j] - grad[j]) * uk)
        .sum();
    if slope > 0.0 {
        u.mapv_inplace(|v| -v);
    }
    let hit = active
        .iter()
        .zip(&u)
        .filter(|(&j, uk)| theta[j] * **uk < 0.0)
        .map(|(&j, uk)| (b[j].abs() / uk.abs(), j))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    let (t, zeroed) = hit?;
    let obj = |v: ArrayView1<'_, f64>| problem.loss(v) + penalty.value(v, lambda);
    let before = obj(b.view());
    let mut next = b.clone();
    for (&j, uk) in active.iter().zip(&u) {
        next[j] += t * uk;
        if next[j] * theta[j] < 0.0 {
            next[j] = 0.0;
        }
    }
    next[zeroed] = 0.0;
    if obj(next.view()) > before + 1e-12 * (1.0 + before.abs()) {
        return None;
    }
    *b = next;
    Some(zeroed)
}

/// Largest violation of the optimality conditions at `b`.
///
/// Free coordinates: `|g_j| ≤ λw_j` when `b_j = 0`, `g_j = λw_j sign(b_j)`
/// otherwise, with `g = c − G b`. Nonnegative coordinates: `g_j ≤ λw_j` at
/// zero, equality when positive. Excluded coordinates must be zero.
pub fn kkt_violation(
    problem: &QuadraticProblem,
    penalty: &Penalty,
    lambda: f64,
    b: ArrayView1<'_, f64>,
) -> f64 {
    let grad = problem.gradient(b);
    let mut worst = 0.0_f64;
    for j in 0..b.len() {
        if penalty.excluded(j, problem.gram[[j, j]]) {
            worst = worst.max(b[j].abs());
            continue;
        }
        let t = lambda * penalty.weights[j];
        let v = match (penalty.constraint, b[j]) {
            (Constraint::Free, bj) if bj != 0.0 => (grad[j] - t * bj.signum()).abs(),
            (Constraint::Free, _) => (grad[j].abs() - t).max(0.0),
            (Constraint::NonNegative, bj) if bj > 0.0 => (grad[j] - t).abs(),
            (Constraint::NonNegative, bj) if bj < 0.0 => bj.abs().max(grad[j] - t),
            (Constraint::NonNegative, _) => (grad[j] - t).max(0.0),
        };
        worst = worst.max(v);
    }
    worst
}
