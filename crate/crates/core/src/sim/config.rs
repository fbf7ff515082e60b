use serde::{Deserialize, Serialize};

use super::generate::{BetaSpec, CovarianceSpec};
use crate::error::{Error, Result};
use crate::selectors::Procedure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replications {
    /// Covariance and coefficient draws (and designs, with `fixed_design`).
    pub outer: usize,
    /// Noise draws per outer draw (and designs, without `fixed_design`).
    pub inner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// Largest λ on the path whose sign pattern is the true one.
    Oracle,
    /// k-fold cross validation on prediction error.
    Cv { folds: usize },
}

fn default_grid_points() -> usize {
    100
}

fn default_true() -> bool {
    true
}

fn default_bootstrap() -> usize {
    200
}

/// A Monte Carlo experiment, read from JSON field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub covariance: CovarianceSpec,
    pub beta: BetaSpec,
    pub sigma2: f64,
    pub replications: Replications,
    /// Method labels such as `Lasso`, `NG-Ridge`, `ALasso-Lasso`, `HT-Univ`.
    pub methods: Vec<String>,
    pub lambda_rule: LambdaRule,
    /// Keep one design per outer draw and vary only the noise.
    #[serde(default)]
    pub fixed_design: bool,
    /// Scale columns to unit variance after centering. With `false` the
    /// design is only centered, the irrepresentable number is computed on the
    /// same centered design (or on Σ itself for redrawn designs) and
    /// methods see the generator's native column scales.
    #[serde(default = "default_true")]
    pub scale_columns: bool,
    /// Test rows per replication for prediction error; 0 disables it.
    #[serde(default)]
    pub n_test: usize,
    /// Points on the λ grid searched by the oracle rule.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Bootstrap resamples for the standard error of median RPE.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Reads one config or a JSON array of them.
    pub fn suite_from_json(text: &str) -> Result<Vec<Self>> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        let cells = match value {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        if cells.is_empty() {
            return Err(Error::InvalidInput("config: empty suite".into()));
        }
        cells
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("config[{i}]: {e}")))
            })
            .collect()
    }

    pub fn procedures(&self) -> Result<Vec<Procedure>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n: need at least 2 observations, got {}", self.n));
        }
        if self.p == 0 {
            problems.push("p: must be positive".to_string());
        }
        if self.s > self.p {
            problems.push(format!("s: {} exceeds p = {}", self.s, self.p));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            problems.push(format!("sigma2: must be positive, got {}", self.sigma2));
        }
        if self.replications.outer == 0 {
            problems.push("replications.outer: must be at least 1".to_string());
        }
        if self.replications.inner == 0 {
            problems.push("replications.inner: must be at least 1".to_string());
        }
        if self.methods.is_empty() {
            problems.push("methods: list is empty".to_string());
        }
        for m in &self.methods {
            if let Err(e) = m.parse::<Procedure>() {
                problems.push(format!("methods: {e}"));
            }
        }
        if let LambdaRule::Cv { folds } = self.lambda_rule {
            if folds < 2 || folds > self.n {
                problems.push(format!("lambda_rule.folds: {folds} is outside [2, n = {}]", self.n));
            }
        }
        if self.grid_points < 2 {
            problems.push(format!("grid_points: need at least 2, got {}", self.grid_points));
        }
        problems.extend(self.covariance.problems(self.p));
        problems.extend(self.beta.problems(self.s));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// Copy with both replication counts multiplied by `factor`, rounded up
    /// and at least one.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |k: usize| ((k as f64 * factor).ceil() as usize).max(1);
        let mut out = self.clone();
        out.replications = Replications {
            outer: scale(self.replications.outer),
            inner: scale(self.replications.inner),
        };
        out
    }
}
