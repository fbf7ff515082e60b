//! Covariance, design and coefficient generators.

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::TrueModel;
use crate::error::{Error, Result};
use crate::numerics::{eigh, Cholesky, SymmetricMatrix, DEFAULT_RANK_TOL};

/// Eigenvalues below this multiple of the largest are clipped to zero when a
/// covariance matrix has no Cholesky factor.
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Identity,
    /// `Wishart(df, I)`; `df` defaults to `p`.
    Wishart {
        #[serde(default)]
        df: Option<usize>,
    },
    /// `Σ_jk = ρ^|j−k|`.
    Ar { rho: f64 },
    /// Unit diagonal, constant off-diagonal `r`.
    Constant { r: f64 },
    /// The first `a` columns form a block with off-diagonal `corr`, the rest
    /// another such block, and the cross block is zero.
    BlockOrthogonal { a: usize, corr: f64 },
}

impl CovarianceSpec {
    /// Whether each draw produces a different matrix.
    pub fn is_random(&self) -> bool {
        matches!(self, CovarianceSpec::Wishart { .. })
    }

    /// Describes every violated parameter constraint for dimension `p`.
    pub fn problems(&self, p: usize) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            CovarianceSpec::Identity => {}
            CovarianceSpec::Wishart { df } => {
                if let Some(df) = df {
                    if df < p {
                        out.push(format!("covariance.df: {df} is below p = {p}"));
                    }
                }
            }
            CovarianceSpec::Ar { rho } => {
                if !(rho > -1.0 && rho < 1.0) {
                    out.push(format!("covariance.rho: {rho} is outside (-1, 1)"));
                }
            }
            CovarianceSpec::Constant { r } => {
                let lo = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
                if !(r > lo && r < 1.0) {
                    out.push(format!("covariance.r: {r} is outside ({lo}, 1)"));
                }
            }
            CovarianceSpec::BlockOrthogonal { a, corr } => {
                if a < 1 || a > p {
                    out.push(format!("covariance.a: {a} is outside [1, {p}]"));
                }
                let big = a.max(p.saturating_sub(a)).max(2);
                let lo = -1.0 / (big as f64 - 1.0);
                if !(corr > lo && corr < 1.0) {
                    out.push(format!("covariance.corr: {corr} is outside ({lo}, 1)"));
                }
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> SymmetricMatrix {
        match *self {
            CovarianceSpec::Identity => SymmetricMatrix::identity(p),
            CovarianceSpec::Wishart { df } => sample_wishart(p, df.unwrap_or(p), rng),
            CovarianceSpec::Ar { rho } => {
                SymmetricMatrix::from_gram(Array2::from_shape_fn((p, p), |(j, k)| {
                    rho.powi((j as i32 - k as i32).abs())
                }))
            }
            CovarianceSpec::Constant { r } => {
                SymmetricMatrix::from_gram(Array2::from_shape_fn((p, p), |(j, k)| if j == k { 1.0 } else { r }))
            }
            CovarianceSpec::BlockOrthogonal { a, corr } => {
                SymmetricMatrix::from_gram(Array2::from_shape_fn((p, p), |(j, k)| {
                    if j == k {
                        1.0
                    } else if (j < a) == (k < a) {
                        corr
                    } else {
                        0.0
                    }
                }))
            }
        }
    }
}

/// `Wishart(df, I_p)` draw by the Bartlett decomposition `W = AAᵀ`, where `A`
/// is lower triangular with `A_ii = √χ²_{df−i}` and standard normal entries
/// below the diagonal.
pub fn sample_wishart<R: Rng + ?Sized>(p: usize, df: usize, rng: &mut R) -> SymmetricMatrix {
    assert!(df >= p, "Wishart degrees of freedom must be at least p");
    let mut a = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        let chi = ChiSquared::new((df - i) as f64).expect("positive degrees of freedom");
        a[[i, i]] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[[i, j]] = rng.sample(StandardNormal);
        }
    }
    SymmetricMatrix::from_gram(a.dot(&a.t()))
}

/// Correlation matrix of a covariance matrix.
pub fn correlation(sigma: &SymmetricMatrix) -> SymmetricMatrix {
    let p = sigma.dim();
    let sd: Vec<f64> = (0..p).map(|j| sigma[[j, j]].sqrt()).collect();
    SymmetricMatrix::from_gram(Array2::from_shape_fn((p, p), |(j, k)| sigma[[j, k]] / (sd[j] * sd[k])))
}

/// Ratio of the largest to the smallest eigenvalue.
pub fn condition_number(sigma: &SymmetricMatrix) -> Result<f64> {
    let ev = eigh(sigma, DEFAULT_RANK_TOL)?.eigenvalues;
    let lo = ev[ev.len() - 1];
    Ok(if lo > 0.0 { ev[0] / lo } else { f64::INFINITY })
}

/// Draws rows from `N(0, Σ)` through a fixed square root of `Σ`.
#[derive(Debug, Clone)]
pub struct DesignSampler {
    /// `Σ = R Rᵀ`.
    root: Array2<f64>,
}

impl DesignSampler {
    /// Uses the Cholesky factor, or the eigenvalue-clipped symmetric root
    /// when `Σ` is singular.
    pub fn new(sigma: &SymmetricMatrix) -> Result<Self> {
        let root = match Cholesky::factor(sigma) {
            Ok(c) => c.lower().clone(),
            Err(_) => {
                let spec = eigh(sigma, DEFAULT_RANK_TOL)?;
                let top = spec.eigenvalues[0].max(0.0);
                let scale = spec
                    .eigenvalues
                    .mapv(|d| if d > CLIP_TOL * top { d.sqrt() } else { 0.0 });
                &spec.eigenvectors * &scale.insert_axis(ndarray::Axis(0))
            }
        };
        Ok(DesignSampler { root })
    }

    pub fn p(&self) -> usize {
        self.root.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        let z = Array2::from_shape_fn((n, self.p()), |_| rng.sample::<f64, _>(StandardNormal));
        z.dot(&self.root.t())
    }
}

/// `n` rows from `N(0, Σ)`.
pub fn sample_design<R: Rng + ?Sized>(n: usize, sigma: &SymmetricMatrix, rng: &mut R) -> Result<Array2<f64>> {
    Ok(DesignSampler::new(sigma)?.sample(n, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Nonzeros occupy the first `s` coordinates.
    #[default]
    First,
    /// Nonzeros occupy `s` uniformly chosen coordinates.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    /// The nonzero values in support order.
    Fixed {
        values: Vec<f64>,
        #[serde(default)]
        placement: Placement,
    },
    /// Magnitudes uniform on `[low, high]` with a random sign.
    Uniform {
        low: f64,
        high: f64,
        #[serde(default)]
        placement: Placement,
    },
    /// `counts[k]` coefficients equal to `values[k]`.
    Tiered {
        values: Vec<f64>,
        counts: Vec<usize>,
        #[serde(default)]
        placement: Placement,
    },
}

impl BetaSpec {
    /// The draw used by the random-design selection experiments.
    pub fn symmetric_uniform() -> Self {
        BetaSpec::Uniform {
            low: 0.5,
            high: 2.0,
            placement: Placement::First,
        }
    }

    pub fn placement(&self) -> Placement {
        match self {
            BetaSpec::Fixed { placement, .. }
            | BetaSpec::Uniform { placement, .. }
            | BetaSpec::Tiered { placement, .. } => *placement,
        }
    }

    /// Every inconsistency with sparsity `s`.
    pub fn problems(&self, s: usize) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            BetaSpec::Fixed { values, .. } => {
                if values.len() != s {
                    out.push(format!("beta.values: {} values for s = {s}", values.len()));
                }
                if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                    out.push("beta.values: entries must be finite and nonzero".into());
                }
            }
            BetaSpec::Uniform { low, high, .. } => {
                if !(*low > 0.0 && high >= low && high.is_finite()) {
                    out.push(format!("beta.low/high: need 0 < low <= high, got [{low}, {high}]"));
                }
            }
            BetaSpec::Tiered { values, counts, .. } => {
                if values.len() != counts.len() {
                    out.push(format!(
                        "beta.counts: {} counts for {} values",
                        counts.len(),
                        values.len()
                    ));
                }
                let total: usize = counts.iter().sum();
                if total != s {
                    out.push(format!("beta.counts: sum to {total}, s = {s}"));
                }
                if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                    out.push("beta.values: entries must be finite and nonzero".into());
                }
            }
        }
        out
    }
}

/// Draws `β*` with `s` nonzeros in dimension `p`.
pub fn gen_beta<R: Rng + ?Sized>(spec: &BetaSpec, p: usize, s: usize, sigma2: f64, rng: &mut R) -> Result<TrueModel> {
    if s > p {
        return Err(Error::InvalidInput(format!("s = {s} exceeds p = {p}")));
    }
    if let Some(detail) = spec.problems(s).into_iter().next() {
        return Err(Error::SpecMismatch { s, detail });
    }
    let values: Vec<f64> = match spec {
        BetaSpec::Fixed { values, .. } => values.clone(),
        BetaSpec::Uniform { low, high, .. } => (0..s)
            .map(|_| {
                let m = rng.random_range(*low..=*high);
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect(),
        BetaSpec::Tiered { values, counts, .. } => values
            .iter()
            .zip(counts)
            .flat_map(|(v, c)| std::iter::repeat_n(*v, *c))
            .collect(),
    };
    let positions: Vec<usize> = match spec.placement() {
        Placement::First => (0..s).collect(),
        Placement::Random => {
            let mut idx = sample(rng, p, s).into_vec();
            idx.sort_unstable();
            // values are assigned to a random order of the chosen positions
            let order = sample(rng, s, s).into_vec();
            order.into_iter().map(|k| idx[k]).collect()
        }
    };
    let mut beta = Array1::zeros(p);
    for (v, j) in values.into_iter().zip(positions) {
        beta[j] = v;
    }
    TrueModel::new(beta, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::array;

    #[test]
    fn wishart_scalar_mean_is_df() {
        let mut rng = stream(1, &[]);
        let k = 7;
        let mean: f64 = (0..10_000).map(|_| sample_wishart(1, k, &mut rng)[[0, 0]]).sum::<f64>() / 1e4;
        assert!((mean - k as f64).abs() < 0.05 * k as f64, "{mean}");
    }

    #[test]
    fn wishart_first_moment() {
        let mut rng = stream(2, &[]);
        let mut acc = Array2::<f64>::zeros((3, 3));
        for _ in 0..10_000 {
            acc = acc + sample_wishart(3, 3, &mut rng).view();
        }
        acc /= 1e4;
        let expect = Array2::<f64>::eye(3) * 3.0;
        for (a, e) in acc.iter().zip(expect.iter()) {
            assert!((a - e).abs() < 0.15, "{acc}");
        }
    }

    #[test]
    fn wishart_is_deterministic_and_psd() {
        let a = sample_wishart(5, 5, &mut stream(3, &[1]));
        let b = sample_wishart(5, 5, &mut stream(3, &[1]));
        assert_eq!(a, b);
        let ev = eigh(&a, DEFAULT_RANK_TOL).unwrap().eigenvalues;
        assert!(ev.iter().all(|&d| d >= -1e-10));
    }

    fn sample_corr(x: &Array2<f64>) -> f64 {
        let a = x.column(0);
        let b = x.column(1);
        let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
        let ca = a.mapv(|v| v - ma);
        let cb = b.mapv(|v| v - mb);
        ca.dot(&cb) / (ca.dot(&ca) * cb.dot(&cb)).sqrt()
    }

    #[test]
    fn design_correlations() {
        let x = sample_design(10_000, &SymmetricMatrix::identity(2), &mut stream(4, &[])).unwrap();
        assert!(sample_corr(&x).abs() < 0.05);
        let sigma = SymmetricMatrix::new(array![[1.0, 0.9], [0.9, 1.0]]).unwrap();
        let x = sample_design(10_000, &sigma, &mut stream(5, &[])).unwrap();
        assert!((sample_corr(&x) - 0.9).abs() < 0.05);
        let again = sample_design(10_000, &sigma, &mut stream(5, &[])).unwrap();
        assert_eq!(x, again);
    }

    #[test]
    fn singular_covariance_uses_clipped_root() {
        let sigma = SymmetricMatrix::new(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let x = sample_design(200, &sigma, &mut stream(6, &[])).unwrap();
        for row in x.rows() {
            assert!((row[0] - row[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn structured_covariances() {
        let mut rng = stream(0, &[]);
        let ar = CovarianceSpec::Ar { rho: 0.5 }.sample(4, &mut rng);
        assert_eq!(ar[[0, 3]], 0.125);
        let c = CovarianceSpec::Constant { r: 0.3 }.sample(3, &mut rng);
        assert_eq!(c[[1, 2]], 0.3);
        assert_eq!(c[[2, 2]], 1.0);
        let b = CovarianceSpec::BlockOrthogonal { a: 2, corr: 0.6 }.sample(5, &mut rng);
        assert_eq!(b[[0, 1]], 0.6);
        assert_eq!(b[[1, 2]], 0.0);
        assert_eq!(b[[3, 4]], 0.6);
        assert!(Cholesky::factor(&b).is_ok());
        assert!(!CovarianceSpec::Constant { r: -0.6 }.problems(3).is_empty());
        assert!(!CovarianceSpec::Ar { rho: 1.0 }.problems(3).is_empty());
    }

    #[test]
    fn correlation_of_scaled_identity() {
        let s = SymmetricMatrix::new(array![[4.0, 2.0], [2.0, 9.0]]).unwrap();
        let r = correlation(&s);
        assert!((r[[0, 1]] - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(r[[1, 1]], 1.0);
    }

    #[test]
    fn beta_generators() {
        let mut rng = stream(9, &[]);
        let fixed = BetaSpec::Fixed {
            values: vec![7.0, 4.0, 2.0, 1.0, 1.0],
            placement: Placement::First,
        };
        let t = gen_beta(&fixed, 32, 5, 0.1, &mut rng).unwrap();
        assert_eq!(t.beta_star.slice(ndarray::s![..5]), array![7.0, 4.0, 2.0, 1.0, 1.0]);
        assert_eq!(t.s(), 5);
        assert_eq!(t.rho_n, 1.0);

        let t = gen_beta(&BetaSpec::symmetric_uniform(), 16, 3, 0.5, &mut rng).unwrap();
        for &j in t.support.indices() {
            let m = t.beta_star[j].abs();
            assert!((0.5..=2.0).contains(&m));
        }

        let tiered = BetaSpec::Tiered {
            values: vec![2.5, 1.5, 0.5],
            counts: vec![5, 5, 5],
            placement: Placement::Random,
        };
        let t = gen_beta(&tiered, 200, 15, 2.25, &mut rng).unwrap();
        assert_eq!(t.s(), 15);
        assert_eq!(t.rho_n, 0.5);
        let total: f64 = t.beta_star.sum();
        assert!((total - 22.5).abs() < 1e-12);

        let err = gen_beta(&tiered, 200, 14, 2.25, &mut rng).unwrap_err();
        assert!(matches!(err, Error::SpecMismatch { s: 14, .. }));
    }

    #[test]
    fn random_placement_spreads_out() {
        let tiered = BetaSpec::Tiered {
            values: vec![1.0],
            counts: vec![3],
            placement: Placement::Random,
        };
        let mut hits = vec![0usize; 10];
        let mut rng = stream(11, &[]);
        for _ in 0..2000 {
            let t = gen_beta(&tiered, 10, 3, 1.0, &mut rng).unwrap();
            for &j in t.support.indices() {
                hits[j] += 1;
            }
        }
        // each coordinate is chosen with probability 0.3
        assert!(hits.iter().all(|&h| (500..700).contains(&h)), "{hits:?}");
    }
}
