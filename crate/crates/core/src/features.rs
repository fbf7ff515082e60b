//! Second-order polynomial expansion of a design.

use std::collections::HashSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which input columns are continuous and which are binary. Binary columns
/// enter as main effects only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureExpansionSpec {
    pub continuous: Vec<String>,
    #[serde(default)]
    pub binary: Vec<String>,
}

impl FeatureExpansionSpec {
    /// The housing-data layout: twelve continuous columns and the river dummy.
    pub fn boston() -> Self {
        let continuous = [
            "CRIM", "ZN", "INDUS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT",
        ];
        FeatureExpansionSpec {
            continuous: continuous.iter().map(|s| s.to_string()).collect(),
            binary: vec!["CHAS".into()],
        }
    }

    /// `p` main effects, `c` squares and `c(c−1)/2` products.
    pub fn output_width(&self) -> usize {
        let c = self.continuous.len();
        c + self.binary.len() + c + c * c.saturating_sub(1) / 2
    }

    fn check(&self, names: &[String]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        for n in self.continuous.iter().chain(&self.binary) {
            if !seen.insert(n) {
                return Err(Error::InvalidInput(format!("column '{n}' listed twice in the expansion spec")));
            }
        }
        for n in names {
            if !seen.contains(n) {
                return Err(Error::InvalidInput(format!("column '{n}' is not in the expansion spec")));
            }
        }
        for c in self.continuous.iter().chain(&self.binary) {
            if !names.contains(c) {
                return Err(Error::InvalidInput(format!("spec column '{c}' is missing from the data")));
            }
        }
        Ok(self
            .continuous
            .iter()
            .map(|c| names.iter().position(|n| n == c).expect("checked above"))
            .collect())
    }
}

/// Main effects in input order, then squares of the continuous columns, then
/// their pairwise products `a*b` for `a` before `b` in the spec.
pub fn expand_features(
    names: &[String],
    x: &Array2<f64>,
    spec: &FeatureExpansionSpec,
) -> Result<(Vec<String>, Array2<f64>)> {
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for {} columns",
            names.len(),
            x.ncols()
        )));
    }
    let cont = spec.check(names)?;
    let n = x.nrows();
    let width = spec.output_width();
    let mut out = Array2::<f64>::zeros((n, width));
    let mut out_names = Vec::with_capacity(width);
    let mut k = 0;
    for (j, name) in names.iter().enumerate() {
        out.column_mut(k).assign(&x.column(j));
        out_names.push(name.clone());
        k += 1;
    }
    for &j in &cont {
        out.column_mut(k).assign(&x.column(j).mapv(|v| v * v));
        out_names.push(format!("{}^2", names[j]));
        k += 1;
    }
    for (a, &i) in cont.iter().enumerate() {
        for &j in &cont[a + 1..] {
            out.column_mut(k).assign(&(&x.column(i) * &x.column(j)));
            out_names.push(format!("{}*{}", names[i], names[j]));
            k += 1;
        }
    }
    debug_assert_eq!(k, width);
    Ok((out_names, out))
}
