//! Datasets, supports and sign patterns.

use std::fmt;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold below which solver output is treated as an exact zero.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Per-column affine transform applied by [`Dataset::standardize`].
///
/// Standardized column `j` is `(x_j − x_mean[j]) / x_scale[j]`, and the
/// response is `y − y_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_mean: Array1<f64>,
    pub x_scale: Array1<f64>,
    pub y_mean: f64,
}

impl Standardization {
    /// Maps standardized-coordinate coefficients back to the original scale.
    /// Returns `(intercept, beta)`.
    pub fn to_original(&self, beta_std: ArrayView1<'_, f64>) -> (f64, Array1<f64>) {
        let beta = &beta_std / &self.x_scale;
        let intercept = self.y_mean - self.x_mean.dot(&beta);
        (intercept, beta)
    }

    /// Inverse of [`Standardization::to_original`] for the slopes.
    pub fn to_standardized(&self, beta: ArrayView1<'_, f64>) -> Array1<f64> {
        &beta * &self.x_scale
    }

    /// Applies the column transform to new rows.
    pub fn transform_x(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.x_mean.view().insert_axis(Axis(0))) / self.x_scale.view().insert_axis(Axis(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design must be nonempty, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("NaN or infinite value in data".into()));
        }
        Ok(Dataset {
            x,
            y,
            standardization: None,
        })
    }

    /// Design without a response (simulation designs before `y` is drawn).
    pub fn design_only(x: Array2<f64>) -> Result<Self> {
        let n = x.nrows();
        Self::new(x, Array1::zeros(n))
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn with_response(&self, y: Array1<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but response has {} entries",
                self.n(),
                y.len()
            )));
        }
        Ok(Dataset {
            x: self.x.clone(),
            y,
            standardization: self.standardization.clone(),
        })
    }

    /// Row subset, keeping the standardization record of the parent.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            standardization: self.standardization.clone(),
        }
    }

    /// Mean-centers every column and scales it to `(1/n)‖x_j‖² = 1`; centers
    /// the response. The record composes with any earlier standardization so
    /// coefficients always map back to the original data.
    pub fn standardize(&self) -> Result<Dataset> {
        self.transform(true)
    }

    /// Centers columns and response but keeps column scales; the record
    /// carries unit scales so coefficients still map back.
    pub fn center(&self) -> Result<Dataset> {
        self.transform(false)
    }

    fn transform(&self, scale_columns: bool) -> Result<Dataset> {
        let n = self.n() as f64;
        let mean = self.x.mean_axis(Axis(0)).expect("n >= 1");
        let mut x = &self.x - &mean.view().insert_axis(Axis(0));
        let mut scale = Array1::zeros(self.p());
        for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
            let ms = col.dot(&col) / n;
            let s = ms.sqrt();
            let raw_max = self.x.column(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(s > 1e-12 * raw_max.max(f64::MIN_POSITIVE)) || s == 0.0 {
                return Err(Error::ConstantColumn(j));
            }
            let s = if scale_columns { s } else { 1.0 };
            col /= s;
            scale[j] = s;
        }
        let y_mean = self.y.mean().expect("n >= 1");
        let y = &self.y - y_mean;
        let record = match &self.standardization {
            None => Standardization {
                x_mean: mean,
                x_scale: scale,
                y_mean,
            },
            Some(prev) => Standardization {
                x_mean: &prev.x_mean + &(&mean * &prev.x_scale),
                x_scale: &prev.x_scale * &scale,
                y_mean: prev.y_mean + y_mean,
            },
        };
        Ok(Dataset {
            x,
            y,
            standardization: Some(record),
        })
    }

    /// Loads a design CSV (header row, numeric columns) and a single-column
    /// response CSV.
    pub fn from_csv(design: &Path, response: &Path) -> Result<(Vec<String>, Dataset)> {
        let (names, x) = read_matrix_csv(design)?;
        let (_, ymat) = read_matrix_csv(response)?;
        if ymat.ncols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "response file must have a single column, found {}",
                ymat.ncols()
            )));
        }
        let y = ymat.column(0).to_owned();
        Ok((names, Dataset::new(x, y)?))
    }
}

/// Reads a headered numeric CSV into a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                i + 1,
                rec.len(),
                names.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "{}: row {}, column '{}': cannot parse '{field}'",
                    path.display(),
                    i + 1,
                    names[j]
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }
    let x = Array2::from_shape_vec((rows, names.len()), values)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((names, x))
}

/// Writes a headered CSV with 17 significant digits per value.
pub fn write_matrix_csv(path: &Path, names: &[String], x: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for row in x.rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&j) = indices.last() {
            if j >= p {
                return Err(Error::InvalidInput(format!(
                    "support index {j} out of bounds for p = {p}"
                )));
            }
        }
        Ok(SupportSet(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// Indices in `[0, p)` not in the set.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|j| !self.contains(*j)).collect()
    }
}

/// Coordinate signs in `{−1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn zeros(p: usize) -> Self {
        SignVector(vec![0; p])
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> SupportSet {
        SupportSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, s)| **s != 0)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    pub fn restrict(&self, idx: &[usize]) -> Array1<f64> {
        idx.iter().map(|&j| f64::from(self.0[j])).collect()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

/// `{j : |β_j| > eps}`.
pub fn support_of(beta: ArrayView1<'_, f64>, eps: f64) -> SupportSet {
    SupportSet(
        beta.iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > eps)
            .map(|(j, _)| j)
            .collect(),
    )
}

/// Per-coordinate sign, mapping `|β_j| ≤ eps` to zero.
pub fn sign_pattern(beta: ArrayView1<'_, f64>, eps: f64) -> SignVector {
    SignVector(
        beta.iter()
            .map(|&b| {
                if b > eps {
                    1
                } else if b < -eps {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// Ground truth of a simulated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta_star: Array1<f64>,
    pub support: SupportSet,
    pub sigma2: f64,
    /// `min_{j∈S} |β*_j|`, zero when the support is empty.
    pub rho_n: f64,
}

impl TrueModel {
    pub fn new(beta_star: Array1<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidInput(format!("sigma2 must be positive, got {sigma2}")));
        }
        let support = support_of(beta_star.view(), 0.0);
        let rho_n = support
            .indices()
            .iter()
            .map(|&j| beta_star[j].abs())
            .fold(f64::INFINITY, f64::min);
        let rho_n = if support.is_empty() { 0.0 } else { rho_n };
        Ok(TrueModel {
            beta_star,
            support,
            sigma2,
            rho_n,
        })
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    pub fn signs(&self) -> SignVector {
        sign_pattern(self.beta_star.view(), 0.0)
    }
}
