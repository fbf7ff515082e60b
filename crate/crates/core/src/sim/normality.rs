//! Finite-sample check of the adaptive Lasso's oracle normality.
//!
//! On a fixed design with no intercept, the statistic
//! `√n · vᵀ(β̂_S − β*_S) / w` with `w² = σ² vᵀ((1/n)X_SᵀX_S)⁻¹v`
//! should be close to standard normal when λ is small enough that the
//! shrinkage bias vanishes at rate faster than `1/√n`.

use ndarray::{Array1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{CovarianceSpec, DesignSampler};
use crate::data::{Dataset, SupportSet};
use crate::diagnostics::oracle_variance;
use crate::error::{Error, Result};
use crate::initial::fit_ols;
use crate::rng::stream;
use crate::selectors::alasso_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityConfig {
    pub n: usize,
    pub p: usize,
    /// Nonzero coefficients, placed first.
    pub beta_s: Vec<f64>,
    pub sigma2: f64,
    /// Correlation of the AR design.
    pub rho: f64,
    /// Second-step λ; defaults to `1/n`.
    pub lambda: Option<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl NormalityConfig {
    /// `n = 400`, `p = 10`, `s = 3`.
    pub fn standard(replications: usize, seed: u64) -> Self {
        NormalityConfig {
            n: 400,
            p: 10,
            beta_s: vec![2.0, -1.5, 1.0],
            sigma2: 1.0,
            rho: 0.3,
            lambda: None,
            replications,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub statistics: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub w2: f64,
    pub lambda: f64,
    pub failures: usize,
}

pub fn run_normality(cfg: &NormalityConfig) -> Result<NormalityResult> {
    let s = cfg.beta_s.len();
    if s == 0 || s > cfg.p || cfg.p >= cfg.n || cfg.replications < 2 {
        return Err(Error::InvalidInput(
            "need 0 < s <= p < n and at least two replications".into(),
        ));
    }
    let sigma = CovarianceSpec::Ar { rho: cfg.rho }.sample(cfg.p, &mut stream(cfg.seed, &[0]));
    let x = DesignSampler::new(&sigma)?.sample(cfg.n, &mut stream(cfg.seed, &[1]));
    let means = x.mean_axis(Axis(0)).expect("nonempty");
    let x = x - &means.insert_axis(Axis(0));
    let mut beta = Array1::zeros(cfg.p);
    for (j, &b) in cfg.beta_s.iter().enumerate() {
        beta[j] = b;
    }
    let support = SupportSet::new((0..s).collect(), cfg.p)?;
    let v = Array1::from_elem(s, 1.0 / (s as f64).sqrt());
    let design = Dataset::design_only(x.clone())?;
    let w2 = oracle_variance(&design, &support, cfg.sigma2, v.view())?;
    let lambda = cfg.lambda.unwrap_or(1.0 / cfg.n as f64);
    let signal = x.dot(&beta);
    let sd = cfg.sigma2.sqrt();
    let root_n = (cfg.n as f64).sqrt();

    let stats: Vec<Option<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, &[2, r as u64]);
            let y = &signal + &Array1::from_shape_fn(cfg.n, |_| sd * rng.sample::<f64, _>(StandardNormal));
            let d = Dataset::new(x.clone(), y).ok()?;
            let init = fit_ols(&d).ok()?;
            let b = alasso_fit(&d, init.beta.view(), lambda, 1.0).ok()?;
            let dev: f64 = (0..s).map(|j| v[j] * (b[j] - beta[j])).sum();
            Some(root_n * dev / w2.sqrt())
        })
        .collect();
    let failures = stats.iter().filter(|s| s.is_none()).count();
    let statistics: Vec<f64> = stats.into_iter().flatten().collect();
    let k = statistics.len() as f64;
    let mean = statistics.iter().sum::<f64>() / k;
    let variance = statistics.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(NormalityResult {
        statistics,
        mean,
        variance,
        w2,
        lambda,
        failures,
    })
}
