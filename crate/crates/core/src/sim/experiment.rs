//! The Monte Carlo engine.
//!
//! Work is split into outer draws (covariance and coefficients, plus the design
//! when it is held fixed) and inner draws (noise, plus the design otherwise).
//! Each unit seeds its own stream from `(seed, stage, outer, inner)`, and
//! results are merged by index, so output is independent of the worker count.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LambdaRule};
use super::generate::{condition_number, correlation, gen_beta, DesignSampler};
use super::metrics::{bootstrap_median_se, median, rpe_with_intercept, tp_fp};
use crate::data::{sign_pattern, Dataset, SignVector, TrueModel, SUPPORT_EPS};
use crate::diagnostics::{eta_infinity, eta_infinity_population};
use crate::error::{Error, Result};
use crate::rng::{derive_key, stream};
use crate::selectors::{select_lambda_cv_cached, select_lambda_oracle, InitialCache, InitialSpec, Procedure};

const STAGE_COVARIANCE: u64 = 0;
const STAGE_BETA: u64 = 1;
const STAGE_FIXED_DESIGN: u64 = 2;
const STAGE_DESIGN: u64 = 3;
const STAGE_TEST: u64 = 4;
const STAGE_NOISE: u64 = 5;
const STAGE_FIT: u64 = 6;
const STAGE_BOOTSTRAP: u64 = 7;

/// What one method produced on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// The method cannot run in this configuration (OLS with p ≥ n).
    NotApplicable,
    Failed { error: String },
    Done {
        success: bool,
        rpe: Option<f64>,
        tp: Option<usize>,
        fp: Option<usize>,
    },
}

/// An outer draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignInfo {
    pub index: usize,
    /// Irrepresentable number of the prepared design, or of the population
    /// matrix (correlation, or Σ when columns are not scaled) when designs
    /// are redrawn per replication; NaN when undefined.
    pub eta_inf: f64,
    pub sigma_condition: f64,
    pub beta_star: Vec<f64>,
}

/// Aggregate for one `(design, method)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub design: usize,
    pub method: String,
    pub eta_inf: f64,
    pub replications: usize,
    pub failures: usize,
    /// Sign-recovery rate over all replications, failures counting as misses;
    /// `None` when the method is not applicable.
    pub success_rate: Option<f64>,
    pub median_rpe: Option<f64>,
    pub median_tp: Option<f64>,
    pub median_fp: Option<f64>,
}

/// Pooled results for one method over every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub replications: usize,
    pub failures: usize,
    pub success_rate: Option<f64>,
    /// Mean over designs of the per-design success rate.
    pub mean_design_success: Option<f64>,
    pub median_rpe: Option<f64>,
    /// Bootstrap standard error of `median_rpe`.
    pub rpe_se: Option<f64>,
    pub mean_rpe: Option<f64>,
    pub median_tp: Option<f64>,
    pub median_fp: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub methods: Vec<String>,
    pub designs: Vec<DesignInfo>,
    /// Indexed `[outer][inner][method]`.
    pub outcomes: Vec<Vec<Vec<Outcome>>>,
}

struct Outer {
    truth: TrueModel,
    sampler: DesignSampler,
    fixed_x: Option<Array2<f64>>,
    info: DesignInfo,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

fn eta_or_nan(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn prepare(cfg: &ExperimentConfig, d: &Dataset) -> Result<Dataset> {
    if cfg.scale_columns {
        d.standardize()
    } else {
        d.center()
    }
}

fn draw_outer(cfg: &ExperimentConfig, o: usize) -> Result<Outer> {
    let sigma = cfg
        .covariance
        .sample(cfg.p, &mut stream(cfg.seed, &[STAGE_COVARIANCE, o as u64]));
    let truth = gen_beta(&cfg.beta, cfg.p, cfg.s, cfg.sigma2, &mut stream(cfg.seed, &[STAGE_BETA, o as u64]))?;
    let sampler = DesignSampler::new(&sigma)?;
    let signs_s = truth.signs().restrict(truth.support.indices());
    let (fixed_x, eta_inf) = if cfg.fixed_design {
        let x = sampler.sample(cfg.n, &mut stream(cfg.seed, &[STAGE_FIXED_DESIGN, o as u64]));
        let eta = Dataset::design_only(x.clone())
            .and_then(|d| prepare(cfg, &d))
            .and_then(|d| eta_infinity(&d, &truth.support, signs_s.view()));
        (Some(x), eta_or_nan(eta))
    } else {
        let population = if cfg.scale_columns { correlation(&sigma) } else { sigma.clone() };
        let eta = eta_infinity_population(&population, &truth.support, signs_s.view());
        (None, eta_or_nan(eta))
    };
    let info = DesignInfo {
        index: o,
        eta_inf,
        sigma_condition: condition_number(&sigma).unwrap_or(f64::NAN),
        beta_star: truth.beta_star.to_vec(),
    };
    Ok(Outer {
        truth,
        sampler,
        fixed_x,
        info,
    })
}

fn needs_ols(proc: &Procedure) -> bool {
    matches!(proc.initial(), Some(InitialSpec::Ols))
}

fn fit_one(
    cfg: &ExperimentConfig,
    proc: &Procedure,
    d: &Dataset,
    truth: &TrueModel,
    signs: &SignVector,
    x_test: Option<&Array2<f64>>,
    cache: &mut InitialCache,
    seed: u64,
) -> Result<Outcome> {
    match cfg.lambda_rule {
        LambdaRule::Oracle => {
            let init = cache.fit(proc, d, seed)?;
            let grid = proc.default_grid(d, init.as_ref(), cfg.grid_points);
            let path = proc.path(d, init.as_ref(), &grid)?;
            let choice = select_lambda_oracle(&path, signs);
            Ok(Outcome::Done {
                success: choice.success,
                rpe: None,
                tp: None,
                fp: None,
            })
        }
        LambdaRule::Cv { folds } => {
            let cv = select_lambda_cv_cached(d, proc, None, folds, seed, cache)?;
            let (b0, beta) = match d.standardization() {
                Some(st) => st.to_original(cv.beta.view()),
                None => (0.0, cv.beta.clone()),
            };
            let success = sign_pattern(beta.view(), SUPPORT_EPS) == *signs;
            let (tp, fp) = tp_fp(beta.view(), &truth.support, SUPPORT_EPS);
            let rpe = x_test
                .map(|xt| rpe_with_intercept(b0, beta.view(), truth.beta_star.view(), xt, cfg.sigma2));
            Ok(Outcome::Done {
                success,
                rpe,
                tp: Some(tp),
                fp: Some(fp),
            })
        }
    }
}

fn replicate(cfg: &ExperimentConfig, procs: &[Procedure], outer: &Outer, o: usize, i: usize) -> Vec<Outcome> {
    let (ou, iu) = (o as u64, i as u64);
    let x = match &outer.fixed_x {
        Some(x) => x.clone(),
        None => outer
            .sampler
            .sample(cfg.n, &mut stream(cfg.seed, &[STAGE_DESIGN, ou, iu])),
    };
    let x_test =
        (cfg.n_test > 0).then(|| outer.sampler.sample(cfg.n_test, &mut stream(cfg.seed, &[STAGE_TEST, ou, iu])));
    let mut rng = stream(cfg.seed, &[STAGE_NOISE, ou, iu]);
    let sd = cfg.sigma2.sqrt();
    let noise: Array1<f64> = (0..cfg.n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let y = x.dot(&outer.truth.beta_star) + noise;
    let d = match Dataset::new(x, y).and_then(|d| prepare(cfg, &d)) {
        Ok(d) => d,
        Err(e) => {
            return vec![Outcome::Failed { error: e.to_string() }; procs.len()];
        }
    };
    let signs = outer.truth.signs();
    // shared by all methods: same folds and a reusable initial fit
    let seed = derive_key(cfg.seed, &[STAGE_FIT, ou, iu]);
    let mut cache = InitialCache::new();
    procs
        .iter()
        .map(|proc| {
            if needs_ols(proc) && cfg.p >= cfg.n {
                return Outcome::NotApplicable;
            }
            fit_one(cfg, proc, &d, &outer.truth, &signs, x_test.as_ref(), &mut cache, seed)
                .unwrap_or_else(|e| Outcome::Failed { error: e.to_string() })
        })
        .collect()
}

/// Runs `cfg` on `workers` threads (0 picks the available parallelism).
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let procs = cfg.procedures()?;
    let pool = pool(workers)?;
    pool.install(|| {
        let outers: Vec<Outer> = (0..cfg.replications.outer)
            .into_par_iter()
            .map(|o| draw_outer(cfg, o))
            .collect::<Result<_>>()?;
        let units: Vec<(usize, usize)> = (0..cfg.replications.outer)
            .flat_map(|o| (0..cfg.replications.inner).map(move |i| (o, i)))
            .collect();
        let flat: Vec<Vec<Outcome>> = units
            .par_iter()
            .map(|&(o, i)| replicate(cfg, &procs, &outers[o], o, i))
            .collect();
        let mut it = flat.into_iter();
        let outcomes = (0..cfg.replications.outer)
            .map(|_| it.by_ref().take(cfg.replications.inner).collect())
            .collect();
        Ok(ExperimentResult {
            config: cfg.clone(),
            methods: procs.iter().map(|p| p.to_string()).collect(),
            designs: outers.into_iter().map(|o| o.info).collect(),
            outcomes,
        })
    })
}

struct Tally {
    replications: usize,
    failures: usize,
    applicable: bool,
    successes: usize,
    rpe: Vec<f64>,
    tp: Vec<f64>,
    fp: Vec<f64>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            replications: 0,
            failures: 0,
            applicable: false,
            successes: 0,
            rpe: Vec::new(),
            tp: Vec::new(),
            fp: Vec::new(),
        }
    }

    fn add(&mut self, o: &Outcome) {
        self.replications += 1;
        match o {
            Outcome::NotApplicable => {}
            Outcome::Failed { .. } => {
                self.applicable = true;
                self.failures += 1;
            }
            Outcome::Done { success, rpe, tp, fp } => {
                self.applicable = true;
                self.successes += usize::from(*success);
                self.rpe.extend(rpe);
                self.tp.extend(tp.map(|v| v as f64));
                self.fp.extend(fp.map(|v| v as f64));
            }
        }
    }

    fn success_rate(&self) -> Option<f64> {
        (self.applicable && self.replications > 0).then(|| self.successes as f64 / self.replications as f64)
    }
}

impl ExperimentResult {
    /// One record per `(design, method)`.
    pub fn records(&self) -> Vec<MetricsRecord> {
        let mut out = Vec::new();
        for (o, design) in self.designs.iter().enumerate() {
            for (m, method) in self.methods.iter().enumerate() {
                let mut t = Tally::new();
                for rep in &self.outcomes[o] {
                    t.add(&rep[m]);
                }
                out.push(MetricsRecord {
                    design: o,
                    method: method.clone(),
                    eta_inf: design.eta_inf,
                    replications: t.replications,
                    failures: t.failures,
                    success_rate: t.success_rate(),
                    median_rpe: median(&t.rpe),
                    median_tp: median(&t.tp),
                    median_fp: median(&t.fp),
                });
            }
        }
        out
    }

    /// Per-method results pooled over all replications.
    pub fn summary(&self) -> Vec<MethodSummary> {
        let records = self.records();
        self.methods
            .iter()
            .enumerate()
            .map(|(m, method)| {
                let mut t = Tally::new();
                for design in &self.outcomes {
                    for rep in design {
                        t.add(&rep[m]);
                    }
                }
                let rates: Vec<f64> = records
                    .iter()
                    .filter(|r| r.method == *method)
                    .filter_map(|r| r.success_rate)
                    .collect();
                let mut boot = stream(self.config.seed, &[STAGE_BOOTSTRAP, m as u64]);
                MethodSummary {
                    method: method.clone(),
                    replications: t.replications,
                    failures: t.failures,
                    success_rate: t.success_rate(),
                    mean_design_success: (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64),
                    median_rpe: median(&t.rpe),
                    rpe_se: bootstrap_median_se(&t.rpe, self.config.bootstrap, &mut boot),
                    mean_rpe: (!t.rpe.is_empty()).then(|| t.rpe.iter().sum::<f64>() / t.rpe.len() as f64),
                    median_tp: median(&t.tp),
                    median_fp: median(&t.fp),
                }
            })
            .collect()
    }

    pub fn method_summary(&self, label: &str) -> Option<MethodSummary> {
        self.summary().into_iter().find(|s| s.method == label)
    }
}

/// Selection experiment: one record per `(design, method)`.
pub fn run_selection_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<MetricsRecord>> {
    Ok(run_experiment(cfg, workers)?.records())
}

/// Prediction experiment: per-method medians with bootstrap standard errors.
pub fn run_prediction_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<MethodSummary>> {
    if cfg.n_test == 0 {
        return Err(Error::InvalidInput("n_test: prediction experiments need test rows".into()));
    }
    Ok(run_experiment(cfg, workers)?.summary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::Replications;
    use crate::sim::generate::{BetaSpec, CovarianceSpec, Placement};

    fn small(rule: LambdaRule) -> ExperimentConfig {
        ExperimentConfig {
            name: "small".into(),
            n: 40,
            p: 8,
            s: 2,
            covariance: CovarianceSpec::Ar { rho: 0.3 },
            beta: BetaSpec::Fixed {
                values: vec![3.0, -2.0],
                placement: Placement::First,
            },
            sigma2: 1e-4,
            replications: Replications { outer: 2, inner: 3 },
            methods: vec!["Lasso".into(), "HT-Ridge".into(), "NG-OLS".into(), "ALasso-Lasso".into()],
            lambda_rule: rule,
            fixed_design: false,
            scale_columns: true,
            n_test: 0,
            grid_points: 100,
            bootstrap: 50,
            seed: 5,
        }
    }

    #[test]
    fn near_noiseless_oracle_recovers() {
        let res = run_experiment(&small(LambdaRule::Oracle), 2).unwrap();
        for s in res.summary() {
            assert_eq!(s.success_rate, Some(1.0), "{}", s.method);
            assert_eq!(s.failures, 0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small(LambdaRule::Cv { folds: 5 });
        cfg.n_test = 30;
        cfg.sigma2 = 1.0;
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 4).unwrap();
        assert_eq!(
            serde_json::to_string(&a.outcomes).unwrap(),
            serde_json::to_string(&b.outcomes).unwrap()
        );
        assert_eq!(a.summary(), b.summary());
    }

    #[test]
    fn zero_support_is_always_recovered() {
        let mut cfg = small(LambdaRule::Oracle);
        cfg.s = 0;
        cfg.beta = BetaSpec::Fixed {
            values: vec![],
            placement: Placement::First,
        };
        cfg.sigma2 = 1.0;
        let res = run_experiment(&cfg, 1).unwrap();
        for s in res.summary() {
            assert_eq!(s.success_rate, Some(1.0), "{}", s.method);
        }
        assert!(res.designs.iter().all(|d| d.eta_inf.is_nan()));
    }

    #[test]
    fn ols_is_not_applicable_when_p_exceeds_n() {
        let mut cfg = small(LambdaRule::Oracle);
        cfg.p = 50;
        let res = run_experiment(&cfg, 1).unwrap();
        let ng = res.method_summary("NG-OLS").unwrap();
        assert_eq!(ng.success_rate, None);
        assert!(res.method_summary("Lasso").unwrap().success_rate.is_some());
    }

    #[test]
    fn clean_signal_gives_exact_support_and_small_rpe() {
        // refitting the true support leaves an excess risk of about s/n
        let mut cfg = small(LambdaRule::Cv { folds: 5 });
        cfg.n_test = 200;
        cfg.sigma2 = 1e-6;
        cfg.methods = vec!["HT-OLS".into()];
        let s = &run_prediction_experiment(&cfg, 1).unwrap()[0];
        assert!(s.median_rpe.unwrap() < 0.5, "{:?}", s.median_rpe);
        assert_eq!(s.median_tp, Some(2.0));
        assert!(s.median_fp.unwrap() <= 6.0);
    }

    #[test]
    fn fixed_design_eta_matches_design_diagnostic() {
        let mut cfg = small(LambdaRule::Oracle);
        cfg.fixed_design = true;
        cfg.replications = Replications { outer: 1, inner: 1 };
        let res = run_experiment(&cfg, 1).unwrap();
        let outer = draw_outer(&cfg, 0).unwrap();
        let d = Dataset::design_only(outer.fixed_x.unwrap()).unwrap().standardize().unwrap();
        let eta = eta_infinity(&d, &outer.truth.support, ndarray::array![1.0, -1.0].view()).unwrap();
        assert_eq!(res.designs[0].eta_inf, eta);
    }

    #[test]
    fn unscaled_mode_uses_centered_design_and_raw_sigma() {
        let mut cfg = small(LambdaRule::Oracle);
        cfg.scale_columns = false;
        cfg.covariance = CovarianceSpec::Wishart { df: None };
        cfg.fixed_design = true;
        cfg.replications = Replications { outer: 1, inner: 2 };
        let res = run_experiment(&cfg, 1).unwrap();
        let outer = draw_outer(&cfg, 0).unwrap();
        let d = Dataset::design_only(outer.fixed_x.unwrap()).unwrap().center().unwrap();
        let eta = eta_infinity(&d, &outer.truth.support, ndarray::array![1.0, -1.0].view()).unwrap();
        assert_eq!(res.designs[0].eta_inf, eta);

        cfg.fixed_design = false;
        let res = run_experiment(&cfg, 1).unwrap();
        let sigma = cfg.covariance.sample(cfg.p, &mut stream(cfg.seed, &[STAGE_COVARIANCE, 0]));
        let eta = eta_infinity_population(&sigma, &outer.truth.support, ndarray::array![1.0, -1.0].view()).unwrap();
        assert_eq!(res.designs[0].eta_inf, eta);
    }
}
