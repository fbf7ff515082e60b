//! `sweep`: mean test error against model size.

use std::path::PathBuf;

use clap::Args;
use twostep::sweep::{sparsity_sweep, SweepConfig, SweepRow};
use twostep::{Dataset, Procedure};

use crate::output::{float, Table};
use crate::{CliError, CliResult};

/// How a path point is matched to a target size; written into every row.
pub const SELECTION_RULE: &str = "nearest_support_size";

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub response: PathBuf,
    /// Comma-separated method labels.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "Lasso,HT-Univ,HT-Ridge,HT-Lasso,ALasso-Univ,ALasso-Ridge,ALasso-Lasso"
    )]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub splits: usize,
    /// Training rows per split; the rest form the test set.
    #[arg(long, default_value_t = 100)]
    pub train_size: usize,
    /// Model sizes 1 through this are reported.
    #[arg(long, default_value_t = 10)]
    pub max_sparsity: usize,
    #[arg(long, default_value_t = 100)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sweep(args: &SweepArgs) -> CliResult<Vec<SweepRow>> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Procedure>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.grid_points < 2 {
        return Err(CliError::Input("--grid-points must be at least 2".into()));
    }
    let (_, d) = Dataset::from_csv(&args.design, &args.response)?;
    let cfg = SweepConfig {
        methods,
        splits: args.splits,
        train_size: args.train_size,
        max_sparsity: args.max_sparsity,
        grid_points: args.grid_points,
        seed: args.seed,
    };
    Ok(sparsity_sweep(&d, &cfg)?)
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&["sparsity", "method", "mean_mse", "mean_size", "splits", "selection"]);
    for r in rows {
        t.push(vec![
            r.sparsity.to_string(),
            r.method.clone(),
            float(r.mean_mse),
            float(r.mean_size),
            r.splits.to_string(),
            SELECTION_RULE.into(),
        ]);
    }
    t
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    sweep_table(&sweep(args)?).write(&args.out)
}
