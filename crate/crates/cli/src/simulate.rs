//! `simulate` and `reproduce`: run experiment suites and write their tables.
//!
//! Every output is a function of the configs, the seed and the scale only,
//! so reruns with any worker count produce identical bytes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use twostep::rng::derive_key;
use twostep::sim::{run_experiment, DesignInfo, ExperimentConfig, ExperimentResult, MethodSummary};

use crate::configs::{suite, Target};
use crate::output::{float, opt_float, write_json, Table};
use crate::{read_text, CliError, CliResult, WORKERS_ENV};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// A config object or an array of them.
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces each cell's seed with one derived from this and the cell index.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies both replication counts (rounded up).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of the full replication counts.
    #[arg(long, default_value_t = 0.2)]
    pub scale: f64,
    /// Full replication counts; overrides `--scale`.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest dimension included in the selection-rate grid.
    #[arg(long, default_value_t = 64)]
    pub max_p: usize,
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub config: ExperimentConfig,
    pub designs: Vec<DesignInfo>,
    pub summary: Vec<MethodSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    /// Replication multiplier applied to every cell (1 when unscaled).
    pub scale: f64,
    pub seed: Option<u64>,
    pub cells: Vec<CellReport>,
}

/// Applies the seed and scale overrides and validates every cell up front.
pub fn prepare(mut cells: Vec<ExperimentConfig>, seed: Option<u64>, scale: f64) -> CliResult<Vec<ExperimentConfig>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Input(format!("--scale must be positive, got {scale}")));
    }
    let mut problems = Vec::new();
    for (i, c) in cells.iter_mut().enumerate() {
        if let Some(s) = seed {
            c.seed = derive_key(s, &[i as u64]);
        }
        if scale != 1.0 {
            *c = c.scaled(scale);
        }
        if let Err(e) = c.validate().and_then(|_| c.procedures().map(|_| ())) {
            let label = if c.name.is_empty() { format!("cell {i}") } else { format!("cell '{}'", c.name) };
            problems.push(format!("{label}: {e}"));
        }
    }
    if problems.is_empty() {
        Ok(cells)
    } else {
        Err(CliError::Input(problems.join("\n")))
    }
}

pub fn run_suite(cells: &[ExperimentConfig], workers: usize) -> CliResult<Vec<ExperimentResult>> {
    cells
        .iter()
        .map(|c| {
            let start = Instant::now();
            let res = run_experiment(c, workers)?;
            eprintln!(
                "{}: {}x{} replications in {:.1}s",
                if c.name.is_empty() { "cell" } else { &c.name },
                c.replications.outer,
                c.replications.inner,
                start.elapsed().as_secs_f64()
            );
            Ok(res)
        })
        .collect()
}

pub fn suite_report(results: &[ExperimentResult], scale: f64, seed: Option<u64>) -> SuiteReport {
    SuiteReport {
        scale,
        seed,
        cells: results
            .iter()
            .map(|r| CellReport {
                config: r.config.clone(),
                designs: r.designs.clone(),
                summary: r.summary(),
            })
            .collect(),
    }
}

/// One row per (cell, design, method).
pub fn records_table(results: &[ExperimentResult]) -> Table {
    let mut t = Table::new(&[
        "cell",
        "design",
        "eta_inf",
        "method",
        "replications",
        "failures",
        "success_rate",
        "median_rpe",
        "median_tp",
        "median_fp",
    ]);
    for r in results {
        for rec in r.records() {
            t.push(vec![
                r.config.name.clone(),
                rec.design.to_string(),
                float(rec.eta_inf),
                rec.method,
                rec.replications.to_string(),
                rec.failures.to_string(),
                opt_float(rec.success_rate),
                opt_float(rec.median_rpe),
                opt_float(rec.median_tp),
                opt_float(rec.median_fp),
            ]);
        }
    }
    t
}

pub fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    let text = read_text(&args.config)?;
    let scale = args.scale.unwrap_or(1.0);
    let cells = prepare(ExperimentConfig::suite_from_json(&text)?, args.seed, scale)?;
    let results = run_suite(&cells, args.workers)?;
    records_table(&results).write(&with_suffix(&args.out, "csv"))?;
    write_json(&suite_report(&results, scale, args.seed), Some(&with_suffix(&args.out, "json")))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Selection rate against η∞, one row per (design, method).
pub fn figure1_table(results: &[ExperimentResult]) -> Table {
    let mut t = Table::new(&["design", "eta_inf", "method", "success_rate", "replications", "failures"]);
    for r in results {
        for rec in r.records() {
            t.push(vec![
                rec.design.to_string(),
                float(rec.eta_inf),
                rec.method,
                opt_float(rec.success_rate),
                rec.replications.to_string(),
                rec.failures.to_string(),
            ]);
        }
    }
    t
}

/// Pooled selection rate per (p, s, method). Cells where no method beats
/// `min_rate` are dropped.
pub fn table1_table(results: &[ExperimentResult], min_rate: f64) -> Table {
    let mut t = Table::new(&["p", "s", "method", "success_rate", "replications", "failures"]);
    for r in results {
        let summary = r.summary();
        if !summary.iter().any(|m| m.success_rate.is_some_and(|v| v > min_rate)) {
            continue;
        }
        for m in summary {
            t.push(vec![
                r.config.p.to_string(),
                r.config.s.to_string(),
                m.method,
                opt_float(m.success_rate),
                m.replications.to_string(),
                m.failures.to_string(),
            ]);
        }
    }
    t
}

/// Median relative prediction error and its bootstrap standard error.
pub fn table2_table(results: &[ExperimentResult]) -> Table {
    let mut t = Table::new(&["cell", "method", "median_rpe", "rpe_se", "mean_rpe", "replications", "failures"]);
    for r in results {
        for m in r.summary() {
            t.push(vec![
                r.config.name.clone(),
                m.method,
                opt_float(m.median_rpe),
                opt_float(m.rpe_se),
                opt_float(m.mean_rpe),
                m.replications.to_string(),
                m.failures.to_string(),
            ]);
        }
    }
    t
}

/// Median true and false positives.
pub fn table3_table(results: &[ExperimentResult]) -> Table {
    let mut t = Table::new(&["cell", "method", "median_tp", "median_fp", "replications", "failures"]);
    for r in results {
        for m in r.summary() {
            t.push(vec![
                r.config.name.clone(),
                m.method,
                opt_float(m.median_tp),
                opt_float(m.median_fp),
                m.replications.to_string(),
                m.failures.to_string(),
            ]);
        }
    }
    t
}

/// Rows of the selection grid are reported when some method exceeds this rate.
pub const TABLE1_MIN_RATE: f64 = 0.01;

pub fn run_reproduce(args: &ReproduceArgs) -> CliResult<()> {
    let scale = if args.full { 1.0 } else { args.scale };
    let cells = prepare(suite(args.target, args.max_p)?, args.seed, scale)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    let results = run_suite(&cells, args.workers)?;
    let name = args.target.name();
    let table = match args.target {
        Target::Figure1 => figure1_table(&results),
        Target::Table1 => table1_table(&results, TABLE1_MIN_RATE),
        Target::Table2 => table2_table(&results),
        Target::Table3 => table3_table(&results),
    };
    table.write(&args.out.join(format!("{name}.csv")))?;
    records_table(&results).write(&args.out.join(format!("{name}_designs.csv")))?;
    write_json(
        &suite_report(&results, scale, args.seed),
        Some(&args.out.join(format!("{name}_summary.json"))),
    )
}
