//! `diagnose`: irrepresentability and rank diagnostics of a design.

use std::path::PathBuf;

use clap::Args;
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use twostep::data::read_matrix_csv;
use twostep::diagnostics::{assumption2_report, design_constants, Assumption2Report, DesignDiagnostics};
use twostep::numerics::{eigh, gram, DEFAULT_RANK_TOL};
use twostep::{Dataset, TrueModel};

use crate::output::write_json;
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Design CSV with a header row.
    #[arg(long)]
    pub design: PathBuf,
    /// Single-column CSV with the true coefficients, one row per column.
    #[arg(long)]
    pub beta: Option<PathBuf>,
    /// Center and scale columns first; by default the design is used as given.
    #[arg(long)]
    pub standardize: bool,
    /// Require the irrepresentable number; fails without `--beta`.
    #[arg(long)]
    pub eta: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Spectrum of `(1/n) XᵀX`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub rank: usize,
    pub largest_eigenvalue: f64,
    pub smallest_eigenvalue: f64,
    /// Ratio of the extreme eigenvalues; absent when the Gram matrix is singular.
    pub condition_number: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub n: usize,
    pub p: usize,
    pub standardized: bool,
    pub spectrum: Spectrum,
    /// Present when the true coefficients are given.
    pub support: Option<Vec<usize>>,
    pub design: Option<DesignDiagnostics>,
    pub assumption2: Option<Assumption2Report>,
}

pub fn diagnose(args: &DiagnoseArgs) -> CliResult<DiagnoseReport> {
    if args.eta && args.beta.is_none() {
        return Err(CliError::Input("--eta needs the true coefficients (--beta)".into()));
    }
    let (_, x) = read_matrix_csv(&args.design)?;
    let raw = Dataset::design_only(x)?;
    let d = if args.standardize { raw.standardize()? } else { raw };
    let spec = eigh(&gram(d.x().view()), DEFAULT_RANK_TOL)?;
    let largest = spec.eigenvalues[0];
    let smallest = spec.eigenvalues[d.p() - 1];
    let spectrum = Spectrum {
        rank: spec.rank,
        largest_eigenvalue: largest,
        smallest_eigenvalue: smallest,
        condition_number: (spec.rank == d.p()).then(|| largest / smallest),
    };
    let mut report = DiagnoseReport {
        n: d.n(),
        p: d.p(),
        standardized: args.standardize,
        spectrum,
        support: None,
        design: None,
        assumption2: None,
    };
    if let Some(path) = &args.beta {
        let (_, b) = read_matrix_csv(path)?;
        if b.ncols() != 1 || b.nrows() != d.p() {
            return Err(CliError::Input(format!(
                "{}: expected a single column of {} values, found {}x{}",
                path.display(),
                d.p(),
                b.nrows(),
                b.ncols()
            )));
        }
        let beta: Array1<f64> = b.column(0).to_owned();
        // the noise level does not enter the design constants
        let truth = TrueModel::new(beta.clone(), 1.0)?;
        report.support = Some(truth.support.indices().to_vec());
        report.design = Some(design_constants(&d, &truth)?);
        report.assumption2 = Some(assumption2_report(&d, beta.view())?);
    }
    Ok(report)
}

pub fn run(args: &DiagnoseArgs) -> CliResult<()> {
    let report = diagnose(args)?;
    write_json(&report, args.out.as_deref())
}
