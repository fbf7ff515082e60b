//! Monte Carlo experiments on simulated sparse linear models.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod metrics;
pub mod normality;

pub use config::{ExperimentConfig, LambdaRule, Replications};
pub use experiment::{
    run_experiment, run_prediction_experiment, run_selection_experiment, DesignInfo, ExperimentResult,
    MethodSummary, MetricsRecord, Outcome,
};
pub use generate::{gen_beta, sample_design, sample_wishart, BetaSpec, CovarianceSpec, DesignSampler, Placement};
pub use metrics::{bootstrap_median_se, median, rpe, rpe_with_intercept, tp_fp};
