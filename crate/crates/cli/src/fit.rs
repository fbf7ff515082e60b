//! `fit`: one procedure on one dataset.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, ValueEnum};
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use twostep::data::{read_matrix_csv, sign_pattern, SUPPORT_EPS};
use twostep::initial::InitialMethod;
use twostep::rng::derive_key;
use twostep::selectors::select_lambda_cv;
use twostep::{Dataset, InitialSpec, Procedure};

use crate::output::write_json;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lasso,
    #[value(alias = "ng")]
    Garrote,
    Alasso,
    Ht,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Ols,
    Univ,
    Ridge,
    Lasso,
}

/// `cvK` for K-fold cross validation or a fixed nonnegative value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Cv(usize),
    Fixed(f64),
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(k) = s.strip_prefix("cv") {
            let k: usize = k.parse().map_err(|_| format!("'{s}': expected cvK with K an integer"))?;
            if k < 2 {
                return Err(format!("'{s}': need at least 2 folds"));
            }
            return Ok(LambdaArg::Cv(k));
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(LambdaArg::Fixed(v)),
            _ => Err(format!("'{s}': expected a nonnegative number or cvK")),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Design CSV with a header row.
    #[arg(long)]
    pub design: PathBuf,
    /// Single-column response CSV with a header row.
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// First-stage estimator for two-step methods.
    #[arg(long, value_enum, default_value = "ridge")]
    pub init: InitArg,
    /// Ridge penalty; chosen by GCV when absent.
    #[arg(long)]
    pub nu: Option<f64>,
    /// λ of a Lasso initial estimate; 5-fold CV when absent.
    #[arg(long)]
    pub init_lambda: Option<f64>,
    /// Single-column CSV with a fixed initial estimate in the fitting
    /// coordinates (standardized unless `--no-standardize`). Overrides `--init`.
    #[arg(long)]
    pub init_coef: Option<PathBuf>,
    /// Adaptive Lasso weight exponent.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Second-step λ: a value, or cvK for K-fold cross validation.
    #[arg(long, default_value = "cv5")]
    pub lambda: LambdaArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Center only; keep the column scales.
    #[arg(long)]
    pub no_standardize: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub lambda: f64,
    /// `fixed` or `cvK`.
    pub lambda_rule: String,
    pub gamma: Option<f64>,
    /// Ridge penalty of the first stage.
    pub nu: Option<f64>,
    /// λ of a Lasso first stage.
    pub init_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub standardized: bool,
    pub tuning: Tuning,
    pub names: Vec<String>,
    pub intercept: f64,
    /// Slopes on the original column scales.
    pub coefficients: Vec<f64>,
    /// Slopes in the fitting coordinates.
    pub fit_coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    /// Penalized objective in the fitting coordinates; absent for hard
    /// thresholding.
    pub objective: Option<f64>,
    pub kkt_residual: f64,
    pub cv_grid: Option<Vec<f64>>,
    pub cv_errors: Option<Vec<f64>>,
    pub wall_time_seconds: f64,
}

pub fn procedure(args: &FitArgs, fixed_init: Option<Vec<f64>>) -> CliResult<Procedure> {
    if args.nu.is_some() && (args.init != InitArg::Ridge || fixed_init.is_some()) {
        return Err(CliError::Input("--nu applies to a ridge initial estimate only".into()));
    }
    if args.init_lambda.is_some() && (args.init != InitArg::Lasso || fixed_init.is_some()) {
        return Err(CliError::Input("--init-lambda applies to a Lasso initial estimate only".into()));
    }
    if !(args.gamma > 0.0 && args.gamma.is_finite()) {
        return Err(CliError::Input(format!("--gamma must be positive, got {}", args.gamma)));
    }
    let initial = match (fixed_init, args.init) {
        (Some(beta), _) => InitialSpec::Fixed { beta },
        (None, InitArg::Ols) => InitialSpec::Ols,
        (None, InitArg::Univ) => InitialSpec::Univariate,
        (None, InitArg::Ridge) => InitialSpec::Ridge { nu: args.nu },
        (None, InitArg::Lasso) => InitialSpec::Lasso {
            lambda: args.init_lambda,
            folds: 5,
        },
    };
    Ok(match args.method {
        MethodArg::Lasso => Procedure::Lasso,
        MethodArg::Garrote => Procedure::Garrote { initial },
        MethodArg::Alasso => Procedure::AdaptiveLasso {
            initial,
            gamma: args.gamma,
        },
        MethodArg::Ht => Procedure::HardThreshold { initial },
    })
}

fn read_column(path: &Path) -> CliResult<Vec<f64>> {
    let (_, m) = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(CliError::Input(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).to_vec())
}

pub fn fit(args: &FitArgs) -> CliResult<FitReport> {
    let start = Instant::now();
    let (names, raw) = Dataset::from_csv(&args.design, &args.response)?;
    let fixed_init = args.init_coef.as_deref().map(read_column).transpose()?;
    let proc = procedure(args, fixed_init)?;
    let d = if args.no_standardize { raw.center()? } else { raw.standardize()? };

    let (init, lambda, cv) = match args.lambda {
        LambdaArg::Cv(k) => {
            let cv = select_lambda_cv(&d, &proc, None, k, args.seed)?;
            (cv.initial.clone(), cv.lambda, Some(cv))
        }
        LambdaArg::Fixed(v) => (proc.fit_initial(&d, derive_key(args.seed, &[u64::MAX]))?, v, None),
    };
    let point = proc.fit_at(&d, init.as_ref(), lambda)?;
    let st = d.standardization().expect("prepared data carries its transform");
    let (intercept, beta) = st.to_original(point.beta.view());
    let signs = sign_pattern(point.beta.view(), SUPPORT_EPS);

    let first_stage = |m: InitialMethod| init.as_ref().filter(|i| i.method == m).and_then(|i| i.tuning);
    Ok(FitReport {
        method: proc.to_string(),
        n: d.n(),
        p: d.p(),
        standardized: !args.no_standardize,
        tuning: Tuning {
            lambda,
            lambda_rule: match args.lambda {
                LambdaArg::Cv(k) => format!("cv{k}"),
                LambdaArg::Fixed(_) => "fixed".into(),
            },
            gamma: matches!(proc, Procedure::AdaptiveLasso { .. }).then_some(args.gamma),
            nu: first_stage(InitialMethod::Ridge),
            init_lambda: first_stage(InitialMethod::Lasso),
        },
        names,
        intercept,
        coefficients: beta.to_vec(),
        fit_coefficients: point.beta.to_vec(),
        support: signs.support().indices().to_vec(),
        signs: signs.entries().to_vec(),
        objective: point.objective,
        kkt_residual: point.kkt_residual,
        cv_grid: cv.as_ref().map(|c| c.grid.clone()),
        cv_errors: cv.as_ref().map(|c| c.cv_errors.clone()),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Predictions `intercept + X β` on raw rows.
pub fn predict(report: &FitReport, x: &ndarray::Array2<f64>) -> Array1<f64> {
    x.dot(&Array1::from(report.coefficients.clone())) + report.intercept
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let report = fit(args)?;
    write_json(&report, args.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        fit: FitArgs,
    }

    fn parse(extra: &[&str]) -> FitArgs {
        let mut argv = vec!["fit", "--design", "x.csv", "--response", "y.csv"];
        argv.extend_from_slice(extra);
        Wrap::try_parse_from(argv).unwrap().fit
    }

    #[test]
    fn lambda_rules_parse() {
        assert_eq!("cv5".parse::<LambdaArg>(), Ok(LambdaArg::Cv(5)));
        assert_eq!("0.25".parse::<LambdaArg>(), Ok(LambdaArg::Fixed(0.25)));
        assert!("cv1".parse::<LambdaArg>().is_err());
        assert!("-1".parse::<LambdaArg>().is_err());
        assert!("cvx".parse::<LambdaArg>().is_err());
    }

    #[test]
    fn flags_map_to_procedures() {
        let a = parse(&["--method", "alasso", "--init", "lasso", "--gamma", "2"]);
        assert_eq!(procedure(&a, None).unwrap().to_string(), "ALasso2-Lasso");
        let a = parse(&["--method", "ng", "--init", "ridge", "--nu", "0.5"]);
        assert_eq!(
            procedure(&a, None).unwrap(),
            Procedure::Garrote {
                initial: InitialSpec::Ridge { nu: Some(0.5) }
            }
        );
        let a = parse(&["--method", "ht"]);
        assert_eq!(procedure(&a, None).unwrap().to_string(), "HT-Ridge");
        assert_eq!(procedure(&a, Some(vec![1.0])).unwrap().to_string(), "HT-Fixed");
    }

    #[test]
    fn stray_tuning_flags_are_input_errors() {
        let a = parse(&["--method", "alasso", "--init", "ols", "--nu", "1"]);
        assert!(matches!(procedure(&a, None), Err(CliError::Input(_))));
        let a = parse(&["--method", "alasso", "--init-lambda", "0.1"]);
        assert!(matches!(procedure(&a, None), Err(CliError::Input(_))));
        let a = parse(&["--method", "alasso", "--gamma", "0"]);
        assert!(procedure(&a, None).is_err());
    }
}
