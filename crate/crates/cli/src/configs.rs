//! Experiment configs and the expansion layout shipped inside the binary.
//! Replication counts are the full ones; `reproduce` scales them down.

use clap::ValueEnum;
use twostep::features::FeatureExpansionSpec;
use twostep::sim::ExperimentConfig;

use crate::CliResult;

pub const FIGURE1: &str = include_str!("../configs/figure1.json");
pub const EXAMPLES: &str = include_str!("../configs/examples.json");
pub const BOSTON_EXPANSION: &str = include_str!("../configs/boston_expansion.json");

/// Selection-rate suites by dimension.
pub const TABLE1: [(usize, &str); 6] = [
    (16, include_str!("../configs/table1_p16.json")),
    (32, include_str!("../configs/table1_p32.json")),
    (64, include_str!("../configs/table1_p64.json")),
    (128, include_str!("../configs/table1_p128.json")),
    (256, include_str!("../configs/table1_p256.json")),
    (512, include_str!("../configs/table1_p512.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Selection rate against the irrepresentable number, fixed designs.
    Figure1,
    /// Selection rate over (p, s) with random Wishart designs.
    Table1,
    /// Median relative prediction error with cross-validated λ.
    Table2,
    /// Median true and false positives with cross-validated λ.
    Table3,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Figure1 => "figure1",
            Target::Table1 => "table1",
            Target::Table2 => "table2",
            Target::Table3 => "table3",
        }
    }
}

/// The cells behind `target`; selection-rate cells are limited to `p ≤ max_p`.
pub fn suite(target: Target, max_p: usize) -> CliResult<Vec<ExperimentConfig>> {
    Ok(match target {
        Target::Figure1 => ExperimentConfig::suite_from_json(FIGURE1)?,
        Target::Table1 => {
            let mut cells = Vec::new();
            for (p, text) in TABLE1 {
                if p <= max_p {
                    cells.extend(ExperimentConfig::suite_from_json(text)?);
                }
            }
            cells
        }
        Target::Table2 | Target::Table3 => ExperimentConfig::suite_from_json(EXAMPLES)?,
    })
}

/// A bundled cell by name, for tests and spot checks.
pub fn cell(name: &str) -> Option<ExperimentConfig> {
    [Target::Figure1, Target::Table1, Target::Table2]
        .into_iter()
        .flat_map(|t| suite(t, usize::MAX).expect("bundled configs parse"))
        .find(|c| c.name == name)
}

pub fn boston_expansion() -> FeatureExpansionSpec {
    serde_json::from_str(BOSTON_EXPANSION).expect("bundled expansion spec parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use twostep::sim::LambdaRule;

    #[test]
    fn every_bundled_cell_validates() {
        for t in [Target::Figure1, Target::Table1, Target::Table2] {
            for c in suite(t, usize::MAX).unwrap() {
                c.validate().unwrap_or_else(|e| panic!("{}: {e}", c.name));
                assert!(c.s <= c.n, "{}", c.name);
            }
        }
    }

    #[test]
    fn selection_grid_layout() {
        let cells = suite(Target::Table1, 64).unwrap();
        let ps: Vec<(usize, usize)> = cells.iter().map(|c| (c.p, c.s)).collect();
        assert_eq!(&ps[..8], &[(16, 1), (16, 3), (16, 5), (16, 7), (16, 9), (16, 11), (16, 13), (16, 15)]);
        assert_eq!(ps.len(), 8 + 8 + 6);
        assert_eq!(ps.last(), Some(&(64, 44)));
        assert_eq!(suite(Target::Table1, usize::MAX).unwrap().len(), 22 + 3 + 2 + 1);
        assert!(cells.iter().all(|c| c.replications.outer * c.replications.inner == 10_000));
    }

    #[test]
    fn prediction_suite_uses_cross_validation() {
        let cells = suite(Target::Table2, 0).unwrap();
        assert_eq!(cells.len(), 9);
        for c in &cells {
            assert_eq!(c.lambda_rule, LambdaRule::Cv { folds: 5 });
            assert_eq!((c.n, c.p, c.s, c.n_test), (50, 200, 15, 1000));
            assert_eq!(c.methods.len(), 7);
        }
        assert_eq!(cell("example3_a50").unwrap().p, 200);
    }

    #[test]
    fn figure_config_holds_designs_fixed() {
        let c = cell("figure1").unwrap();
        assert!(c.fixed_design && !c.scale_columns);
        assert_eq!(c.methods, ["Lasso", "NG-Ridge", "ALasso-Ridge", "HT-Ridge"]);
    }

    #[test]
    fn boston_spec_gives_91_columns() {
        assert_eq!(boston_expansion(), FeatureExpansionSpec::boston());
        assert_eq!(boston_expansion().output_width(), 91);
    }
}
