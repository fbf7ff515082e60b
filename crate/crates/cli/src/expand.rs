//! `expand-features`: second-order expansion of a raw design.

use std::path::PathBuf;

use clap::Args;
use twostep::data::{read_matrix_csv, write_matrix_csv};
use twostep::features::{expand_features, FeatureExpansionSpec};

use crate::configs::boston_expansion;
use crate::{read_text, CliError, CliResult};

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Raw design CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON with `continuous` and `binary` column lists; the housing-data
    /// layout (12 continuous columns and CHAS) when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn load_spec(path: Option<&PathBuf>) -> CliResult<FeatureExpansionSpec> {
    match path {
        None => Ok(boston_expansion()),
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
    }
}

pub fn run(args: &ExpandArgs) -> CliResult<()> {
    let spec = load_spec(args.spec.as_ref())?;
    let (names, x) = read_matrix_csv(&args.input)?;
    let (out_names, out) = expand_features(&names, &x, &spec)?;
    write_matrix_csv(&args.out, &out_names, &out)?;
    Ok(())
}
