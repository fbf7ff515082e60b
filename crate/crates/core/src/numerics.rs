//! Dense kernels shared by the estimators: Cholesky solves, symmetric
//! eigendecomposition and the soft-thresholding operator.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Relative rank tolerance used when counting nonzero eigenvalues.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Pivots below this multiple of the largest diagonal entry are treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Dense symmetric matrix, stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Array2<f64>);

impl SymmetricMatrix {
    /// Validates symmetry to within `1e-12` relative to the largest entry.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {r}x{c}"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = max_abs(a.view()).max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                let gap = (a[[i, j]] - a[[j, i]]).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(SymmetricMatrix(a))
    }

    /// Symmetrizes `a` as `(a + aᵀ)/2` without validation. Use for matrices
    /// that are symmetric by construction but carry round-off asymmetry.
    pub fn from_gram(a: Array2<f64>) -> Self {
        let t = a.t().to_owned();
        SymmetricMatrix((a + t) * 0.5)
    }

    pub fn identity(dim: usize) -> Self {
        SymmetricMatrix(Array2::eye(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> SymmetricMatrix {
        let sub = self.0.select(Axis(0), idx).select(Axis(1), idx);
        SymmetricMatrix(sub)
    }
}

impl std::ops::Index<[usize; 2]> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, ix: [usize; 2]) -> &f64 {
        &self.0[ix]
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymmetricMatrix) -> Result<Self> {
        let n = a.dim();
        let a = a.view();
        let max_diag = (0..n).map(|i| a[[i, i]]).fold(0.0_f64, f64::max);
        let floor = PIVOT_TOL * max_diag;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > floor) || max_diag <= 0.0 {
                return Err(Error::SingularMatrix { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[[j, j]] = djj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        let n = self.l.nrows();
        assert_eq!(b.len(), n, "right-hand side length must match the factor");
        let mut z = b.to_owned();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[[i, k]] * z[k];
            }
            z[i] = s / self.l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * z[k];
            }
            z[i] = s / self.l[[i, i]];
        }
        z
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.axis_iter(Axis(1)).enumerate() {
            out.column_mut(j).assign(&self.solve(col));
        }
        out
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.l.nrows();
        self.solve_matrix(Array2::<f64>::eye(n).view())
    }
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
///
/// Fails with [`Error::SingularMatrix`] instead of adding jitter.
pub fn solve_spd(a: &SymmetricMatrix, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix is {}x{}",
            b.len(),
            a.dim(),
            a.dim()
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

/// Eigenvalues in non-increasing order with matching orthonormal eigenvectors
/// (columns of `eigenvectors`).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    /// Number of eigenvalues above `rank_tol · d_1`.
    pub rank: usize,
}

impl SpectralDecomposition {
    /// `E diag(d) Eᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }
}

/// Symmetric eigendecomposition (Householder tridiagonalization and
/// implicit QR).
pub fn eigh(a: &SymmetricMatrix, rank_tol: f64) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let m = a.view();
    let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = nalgebra::SymmetricEigen::try_new(dense, f64::EPSILON, EIGEN_MAX_ITERATIONS)
        .ok_or(Error::NonConvergence { sweeps: EIGEN_MAX_ITERATIONS })?;
    let values = &eig.eigenvalues;
    let vectors = &eig.eigenvectors;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues: Array1<f64> = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = Array2::from_shape_fn((n, n), |(r, c)| vectors[(r, order[c])]);
    let top = eigenvalues[0];
    let rank = if top > 0.0 {
        eigenvalues.iter().filter(|&&d| d > rank_tol * top).count()
    } else {
        0
    };
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        rank,
    })
}

/// `sign(z) · max(0, |z| − t)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0, "threshold must be nonnegative");
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `(1/n) XᵀX`.
pub fn gram(x: ArrayView2<'_, f64>) -> SymmetricMatrix {
    let n = x.nrows() as f64;
    SymmetricMatrix::from_gram(x.t().dot(&x) / n)
}

pub fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn norm_inf(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Maximum absolute row sum.
pub fn matrix_norm_inf(a: ArrayView2<'_, f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn sym(a: Array2<f64>) -> SymmetricMatrix {
        SymmetricMatrix::new(a).unwrap()
    }

    #[test]
    fn solve_identity() {
        let x = solve_spd(&SymmetricMatrix::identity(3), array![1.0, 2.0, 3.0].view()).unwrap();
        assert_eq!(x, array![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal() {
        let a = sym(array![[2.0, 0.0], [0.0, 4.0]]);
        let x = solve_spd(&a, array![2.0, 4.0].view()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_two_by_two_matches_closed_form_inverse() {
        // inverse of [[a,b],[b,d]] is [[d,-b],[-b,a]]/(ad-b^2)
        let (a, b, d) = (2.0, 1.0, 2.0);
        let det = a * d - b * b;
        let rhs = [3.0, 3.0];
        let expect = [
            (d * rhs[0] - b * rhs[1]) / det,
            (-b * rhs[0] + a * rhs[1]) / det,
        ];
        let x = solve_spd(&sym(array![[a, b], [b, d]]), array![3.0, 3.0].view()).unwrap();
        assert!((x[0] - expect[0]).abs() < 1e-14);
        assert!((x[1] - expect[1]).abs() < 1e-14);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = sym(array![[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            solve_spd(&a, array![1.0, 1.0].view()),
            Err(Error::SingularMatrix { index: 1, .. })
        ));
    }

    #[test]
    fn asymmetric_input_rejected() {
        assert!(matches!(
            SymmetricMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eigh_diagonal() {
        let e = eigh(&sym(Array2::from_diag(&array![2.0, 0.0, 3.0])), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(e.eigenvalues, array![3.0, 2.0, 0.0]);
        assert_eq!(e.rank, 2);
    }

    #[test]
    fn eigh_identity() {
        let e = eigh(&SymmetricMatrix::identity(4), DEFAULT_RANK_TOL).unwrap();
        assert!(e.eigenvalues.iter().all(|&d| d == 1.0));
        assert_eq!(e.rank, 4);
    }

    #[test]
    fn eigh_rank_one() {
        // trace 2, det 0 -> eigenvalues (2, 0)
        let e = eigh(&sym(array![[1.0, 1.0], [1.0, 1.0]]), DEFAULT_RANK_TOL).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
        assert_eq!(e.rank, 1);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        for z in [-3.0, -1e-9, 0.0, 0.7, 12.5] {
            assert_eq!(soft_threshold(z, 0.0), z);
        }
    }

    fn random_spd(dim: usize, seed: u64) -> SymmetricMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = Array2::from_shape_fn((dim, dim), |_| rng.random_range(-1.0..1.0));
        let mut a = b.t().dot(&b);
        for i in 0..dim {
            a[[i, i]] += 0.1;
        }
        SymmetricMatrix::from_gram(a)
    }

    fn random_sym(dim: usize, rank: usize, seed: u64) -> SymmetricMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = Array2::from_shape_fn((rank, dim), |_| rng.random_range(-1.0..1.0));
        SymmetricMatrix::from_gram(b.t().dot(&b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solve_spd_residual(dim in 1usize..=50, seed in any::<u64>()) {
            let a = random_spd(dim, seed);
            let b: Array1<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
            let x = solve_spd(&a, b.view()).unwrap();
            let r = a.view().dot(&x) - &b;
            prop_assert!(norm_inf(r.view()) <= 1e-8 * (1.0 + norm_inf(b.view())));
        }

        #[test]
        fn eigh_invariants(dim in 1usize..=10, rank in 1usize..=10, seed in any::<u64>()) {
            let a = random_sym(dim, rank, seed);
            let e = eigh(&a, DEFAULT_RANK_TOL).unwrap();
            let amax = max_abs(a.view());
            let recon = e.reconstruct() - a.view();
            prop_assert!(max_abs(recon.view()) <= 1e-8 * amax);
            let gram_e = e.eigenvectors.t().dot(&e.eigenvectors) - Array2::<f64>::eye(dim);
            prop_assert!(max_abs(gram_e.view()) <= 1e-10);
            for w in e.eigenvalues.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            let trace: f64 = a.view().diag().sum();
            prop_assert!((e.eigenvalues.sum() - trace).abs() <= 1e-8 * trace.abs().max(1.0));
            prop_assert_eq!(e.rank, rank.min(dim));
            // pseudo-determinant: product of nonzero eigenvalues against the
            // determinant of the compressed Gram B Bᵀ when B has full row rank
            if rank <= dim {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let b = Array2::from_shape_fn((rank, dim), |_| rng.random_range(-1.0..1.0));
                let bbt = SymmetricMatrix::from_gram(b.dot(&b.t()));
                let chol = Cholesky::factor(&bbt).unwrap();
                let det: f64 = chol.lower().diag().iter().map(|d| d * d).product();
                let pdet: f64 = e.eigenvalues.iter().take(e.rank).product();
                prop_assert!((pdet - det).abs() <= 1e-6 * det.abs());
            }
        }

        #[test]
        fn soft_threshold_odd_and_nonexpansive(a in -10.0f64..10.0, b in -10.0f64..10.0, t in 0.0f64..5.0) {
            prop_assert_eq!(soft_threshold(-a, t), -soft_threshold(a, t));
            prop_assert!((soft_threshold(a, t) - soft_threshold(b, t)).abs() <= (a - b).abs() + 1e-14 * (1.0 + a.abs() + b.abs()));
        }
    }
}
