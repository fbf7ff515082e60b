//! Design conditions and finite-sample sign-recovery certificates.
//!
//! Everything here works on the Gram form `G = (1/n)XᵀX`; the irrepresentable
//! quantities are invariant to the `1/n` factor.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SupportSet, TrueModel};
use crate::error::{Error, Result};
use crate::numerics::{eigh, gram, norm_inf, Cholesky, SymmetricMatrix, DEFAULT_RANK_TOL};
use crate::selectors::ZERO_INIT_TOL;

/// Slack on both inequalities: the strict one must clear it and the
/// non-strict one may miss by it.
pub const CERTIFICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    pub eta_inf: f64,
    /// `‖X_Sᶜᵀ X_S (X_Sᵀ X_S)⁻¹‖_∞`.
    pub c_max: f64,
    /// Smallest eigenvalue of `(1/n) X_Sᵀ X_S`.
    pub lambda_min: f64,
    pub rho_n: f64,
    /// `max_i ‖x_{i,S}‖ / √n`, informational.
    pub max_row_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Report {
    /// Numerical rank of `(1/n) XᵀX`.
    pub q: usize,
    /// The `q` leading eigenvalues.
    pub singular_values: Vec<f64>,
    /// Sup norm of the component of `β*` outside the leading `q` eigenvectors.
    pub xi_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateMethod {
    Garrote,
    Alasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRecoveryCertificate {
    pub method: CertificateMethod,
    pub no_underselection: bool,
    /// Smallest entry of `t ∘ d_S` (must be strictly positive), `t` being the
    /// required sign of `d_S`.
    pub underselection_margin: f64,
    pub no_overselection: bool,
    /// Smallest slack `λ − v_j` over `j ∈ Sᶜ` (must be nonnegative).
    pub overselection_margin: f64,
    /// `sign(β̂_S) = sign(β*_S)`. The garrote cannot flip signs, so exact sign
    /// recovery needs this on top of the support conditions; always true for
    /// the adaptive Lasso.
    pub init_signs_agree: bool,
}

impl SignRecoveryCertificate {
    /// A solution with support exactly `S` exists.
    pub fn recovers_support(&self) -> bool {
        self.no_underselection && self.no_overselection
    }

    /// A solution with sign pattern exactly `sign(β*)` exists.
    pub fn recovers_signs(&self) -> bool {
        self.recovers_support() && self.init_signs_agree
    }
}

fn check_support(s: &SupportSet, p: usize) -> Result<()> {
    if s.is_empty() || s.len() >= p {
        return Err(Error::InvalidInput(format!(
            "support must be a nonempty proper subset, got {} of {p} columns",
            s.len()
        )));
    }
    Ok(())
}

/// `G_{SᶜS} G_{SS}⁻¹` for `G = (1/n)XᵀX`.
fn projection_coefficients(g: &SymmetricMatrix, s: &[usize], sc: &[usize]) -> Result<Array2<f64>> {
    let chol = Cholesky::factor(&g.submatrix(s))?;
    let cross = g.view().select(Axis(0), s).select(Axis(1), sc);
    // (G_SS⁻¹ G_{SSᶜ})ᵀ
    Ok(chol.solve_matrix(cross.view()).reversed_axes())
}

/// `1 − ‖X_SᶜᵀX_S(X_SᵀX_S)⁻¹ sign_S‖_∞`; `sign_s` lists the signs on `S`
/// in index order.
pub fn eta_infinity(d: &Dataset, s: &SupportSet, sign_s: ArrayView1<'_, f64>) -> Result<f64> {
    check_support(s, d.p())?;
    if sign_s.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} signs for a support of size {}",
            sign_s.len(),
            s.len()
        )));
    }
    let g = gram(d.x().view());
    let m = projection_coefficients(&g, s.indices(), &s.complement(d.p()))?;
    Ok(1.0 - norm_inf(m.dot(&sign_s).view()))
}

/// `η∞` for a population covariance `Σ` in place of the sample Gram matrix.
pub fn eta_infinity_population(sigma: &SymmetricMatrix, s: &SupportSet, sign_s: ArrayView1<'_, f64>) -> Result<f64> {
    check_support(s, sigma.dim())?;
    let m = projection_coefficients(sigma, s.indices(), &s.complement(sigma.dim()))?;
    Ok(1.0 - norm_inf(m.dot(&sign_s).view()))
}

pub fn design_constants(d: &Dataset, truth: &TrueModel) -> Result<DesignDiagnostics> {
    let s = &truth.support;
    check_support(s, d.p())?;
    let idx = s.indices();
    let g = gram(d.x().view());
    let m = projection_coefficients(&g, idx, &s.complement(d.p()))?;
    let signs = truth.signs().restrict(idx);
    let eta_inf = 1.0 - norm_inf(m.dot(&signs).view());
    let c_max = m
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lambda_min = eigh(&g.submatrix(idx), DEFAULT_RANK_TOL)?
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let xs = d.x().select(Axis(1), idx);
    let max_row_norm = xs
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
        / (d.n() as f64).sqrt();
    Ok(DesignDiagnostics {
        eta_inf,
        c_max,
        lambda_min,
        rho_n: truth.rho_n,
        max_row_norm,
    })
}

/// Shared core of the two certificates on `Z = X·diag(β̂)`.
///
/// With `t` the required sign of `d_S`, the candidate solution on `S` is
/// `d_S = (Z_SᵀZ_S/n)⁻¹((1/n)Z_Sᵀ(X_Sβ*_S + ε) − λt)` and the off-support
/// statistic is `v = (1/n)Z_Sᶜᵀ(I−P)ε + λZ_SᶜᵀZ_S(Z_SᵀZ_S)⁻¹t`.
fn certify(
    method: CertificateMethod,
    d: &Dataset,
    init: ArrayView1<'_, f64>,
    truth: &TrueModel,
    lambda: f64,
    noise: ArrayView1<'_, f64>,
) -> Result<SignRecoveryCertificate> {
    let (n, p) = d.x().dim();
    if init.len() != p || truth.p() != p || noise.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design {n}x{p}, initial estimate {}, truth {}, noise {}",
            init.len(),
            truth.p(),
            noise.len()
        )));
    }
    let s = &truth.support;
    check_support(s, p)?;
    let idx = s.indices();
    let sc = s.complement(p);
    let nf = n as f64;

    let init_signs_agree = idx
        .iter()
        .all(|&j| init[j].abs() >= ZERO_INIT_TOL && init[j].signum() == truth.beta_star[j].signum());
    let t: Array1<f64> = match method {
        CertificateMethod::Garrote => Array1::ones(idx.len()),
        CertificateMethod::Alasso => idx
            .iter()
            .map(|&j| (truth.beta_star[j] / init[j]).signum())
            .collect(),
    };

    let z = d.x() * &init.insert_axis(Axis(0));
    let zs = z.select(Axis(1), idx);
    let zsc = z.select(Axis(1), &sc);
    let gss = SymmetricMatrix::from_gram(zs.t().dot(&zs) / nf);
    let chol = Cholesky::factor(&gss)?;

    let signal = d.x().select(Axis(1), idx).dot(&truth.beta_star.select(Axis(0), idx));
    let y = signal + noise;
    let rhs = zs.t().dot(&y) / nf - &t * lambda;
    let d_s = chol.solve(rhs.view());
    let under_margin = d_s
        .iter()
        .zip(t.iter())
        .map(|(v, ti)| v * ti)
        .fold(f64::INFINITY, f64::min);

    // (I − P)ε through the residual of ε on Z_S
    let eps_coef = chol.solve((zs.t().dot(&noise) / nf).view());
    let resid = &noise - &zs.dot(&eps_coef);
    let back = chol.solve(t.view());
    let v = zsc.t().dot(&resid) / nf + zsc.t().dot(&zs.dot(&back)) * (lambda / nf);
    let over_margin = v
        .iter()
        .map(|&vj| match method {
            CertificateMethod::Garrote => lambda - vj,
            CertificateMethod::Alasso => lambda - vj.abs(),
        })
        .fold(f64::INFINITY, f64::min);

    Ok(SignRecoveryCertificate {
        method,
        // a margin within rounding of zero sits on the boundary where the solution is zero
        no_underselection: under_margin > CERTIFICATE_TOL,
        underselection_margin: under_margin,
        no_overselection: over_margin >= -CERTIFICATE_TOL * (1.0 + lambda),
        overselection_margin: over_margin,
        init_signs_agree: method == CertificateMethod::Alasso || init_signs_agree,
    })
}

/// Garrote sign-recovery certificate for realized noise `ε = y − Xβ*`.
pub fn certify_garrote(
    d: &Dataset,
    init: ArrayView1<'_, f64>,
    truth: &TrueModel,
    lambda: f64,
    noise: ArrayView1<'_, f64>,
) -> Result<SignRecoveryCertificate> {
    certify(CertificateMethod::Garrote, d, init, truth, lambda, noise)
}

/// Adaptive Lasso (γ = 1) sign-recovery certificate. The sign of `d_S` must
/// match `sign(β*_S/β̂_S)` for the recovered signs to be right.
pub fn certify_alasso(
    d: &Dataset,
    init: ArrayView1<'_, f64>,
    truth: &TrueModel,
    lambda: f64,
    noise: ArrayView1<'_, f64>,
) -> Result<SignRecoveryCertificate> {
    certify(CertificateMethod::Alasso, d, init, truth, lambda, noise)
}

pub fn assumption2_report(d: &Dataset, beta_star: ArrayView1<'_, f64>) -> Result<Assumption2Report> {
    if beta_star.len() != d.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, design has {} columns",
            beta_star.len(),
            d.p()
        )));
    }
    let spec = eigh(&gram(d.x().view()), DEFAULT_RANK_TOL)?;
    let q = spec.rank;
    let mut tail = Array1::<f64>::zeros(d.p());
    for j in q..d.p() {
        let e = spec.eigenvectors.column(j);
        tail.scaled_add(e.dot(&beta_star), &e);
    }
    Ok(Assumption2Report {
        q,
        singular_values: spec.eigenvalues.iter().take(q).copied().collect(),
        xi_hat: if q == d.p() { 0.0 } else { norm_inf(tail.view()) },
    })
}

/// `σ² vᵀ((1/n)X_SᵀX_S)⁻¹v`.
pub fn oracle_variance(d: &Dataset, s: &SupportSet, sigma2: f64, v: ArrayView1<'_, f64>) -> Result<f64> {
    if v.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "v has {} entries for a support of size {}",
            v.len(),
            s.len()
        )));
    }
    if v.dot(&v) > 1.0 + 1e-12 {
        return Err(Error::InvalidInput("v must have norm at most 1".into()));
    }
    let g = gram(d.x().view());
    let sol = Cholesky::factor(&g.submatrix(s.indices()))?.solve(v);
    Ok(sigma2 * v.dot(&sol))
}

/// `‖β̂ − β*‖_∞`, the realized counterpart of the initial estimator's rate.
pub fn sup_error(beta_hat: ArrayView1<'_, f64>, beta_star: ArrayView1<'_, f64>) -> f64 {
    norm_inf((&beta_hat - &beta_star).view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{orthonormal_design, random_dataset};
    use crate::selectors::{alasso_fit, garrote_fit, garrote_lambda_max};
    use ndarray::{array, s, Array2};

    fn supp(idx: &[usize], p: usize) -> SupportSet {
        SupportSet::new(idx.to_vec(), p).unwrap()
    }

    #[test]
    fn eta_orthogonal_blocks_is_one() {
        let d = Dataset::design_only(orthonormal_design(20, 4, 1)).unwrap();
        let eta = eta_infinity(&d, &supp(&[0, 1], 4), array![1.0, -1.0].view()).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_duplicated_column_is_zero() {
        let mut x = orthonormal_design(20, 3, 2);
        let c0 = x.column(0).to_owned();
        x.column_mut(2).assign(&c0);
        let d = Dataset::design_only(x).unwrap();
        let eta = eta_infinity(&d, &supp(&[0, 1], 3), array![1.0, 1.0].view()).unwrap();
        assert!(eta.abs() < 1e-12);
    }

    #[test]
    fn eta_mixed_column() {
        // x3 = 0.6 x1 + 0.6 x2: the projected sign vector has entry 1.2
        let mut x = orthonormal_design(30, 3, 3);
        let mix = &x.column(0) * 0.6 + &x.column(1) * 0.6;
        x.column_mut(2).assign(&mix);
        let d = Dataset::design_only(x).unwrap();
        let eta = eta_infinity(&d, &supp(&[0, 1], 3), array![1.0, 1.0].view()).unwrap();
        assert!((eta + 0.2).abs() < 1e-12, "{eta}");
        let flipped = eta_infinity(&d, &supp(&[0, 1], 3), array![1.0, -1.0].view()).unwrap();
        assert!((flipped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_is_scale_invariant() {
        let d = random_dataset(40, 6, 4);
        let s = supp(&[0, 2, 5], 6);
        let signs = array![1.0, -1.0, 1.0];
        let a = eta_infinity(&d, &s, signs.view()).unwrap();
        let scaled = Dataset::design_only(d.x() * 3.7).unwrap();
        let b = eta_infinity(&scaled, &s, signs.view()).unwrap();
        let c = eta_infinity(&d.standardize().unwrap(), &s, signs.view()).unwrap();
        let c2 = eta_infinity(&scaled.standardize().unwrap(), &s, signs.view()).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!((c - c2).abs() < 1e-10);
    }

    #[test]
    fn eta_rejects_bad_supports() {
        let d = random_dataset(10, 3, 0);
        assert!(eta_infinity(&d, &supp(&[], 3), array![].view()).is_err());
        assert!(eta_infinity(&d, &supp(&[0, 1, 2], 3), array![1.0, 1.0, 1.0].view()).is_err());
        let mut x = d.x().clone();
        let c0 = x.column(0).to_owned();
        x.column_mut(1).assign(&c0);
        let d = Dataset::design_only(x).unwrap();
        let err = eta_infinity(&d, &supp(&[0, 1], 3), array![1.0, 1.0].view()).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn design_constants_examples() {
        let x = orthonormal_design(25, 5, 5);
        let d = Dataset::design_only(x.clone()).unwrap();
        let truth = TrueModel::new(array![3.0, -1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        let dc = design_constants(&d, &truth).unwrap();
        assert!(dc.c_max.abs() < 1e-12);
        assert!((dc.lambda_min - 1.0).abs() < 1e-12);
        assert!((dc.eta_inf - 1.0).abs() < 1e-12);
        assert_eq!(dc.rho_n, 1.0);

        let mut dup = x.clone();
        let c0 = dup.column(0).to_owned();
        dup.column_mut(3).assign(&c0);
        let dc = design_constants(&Dataset::design_only(dup).unwrap(), &truth).unwrap();
        assert!((dc.c_max - 1.0).abs() < 1e-12);

        let scaled = Dataset::design_only(x * 2f64.sqrt()).unwrap();
        let dc = design_constants(&scaled, &truth).unwrap();
        assert!((dc.lambda_min - 2.0).abs() < 1e-12);
    }

    #[test]
    fn row_norm_matches_direct_computation() {
        let d = random_dataset(12, 4, 8);
        let truth = TrueModel::new(array![1.0, 0.0, 2.0, 0.0], 1.0).unwrap();
        let dc = design_constants(&d, &truth).unwrap();
        let direct = (0..12)
            .map(|i| (d.x()[[i, 0]].powi(2) + d.x()[[i, 2]].powi(2)).sqrt())
            .fold(0.0, f64::max)
            / 12f64.sqrt();
        assert!((dc.max_row_norm - direct).abs() < 1e-14);
    }

    #[test]
    fn noiseless_orthonormal_certificates() {
        let x = orthonormal_design(40, 4, 6);
        let beta = array![2.0, -1.5, 0.0, 0.0];
        let d = Dataset::new(x.clone(), x.dot(&beta)).unwrap();
        let truth = TrueModel::new(beta.clone(), 1.0).unwrap();
        let init = array![2.1, -1.4, 0.05, -0.02];
        let noise = Array1::zeros(40);
        let lambda = 0.1;
        let g = certify_garrote(&d, init.view(), &truth, lambda, noise.view()).unwrap();
        assert!(g.recovers_signs());
        // d_j = β*_j/β̂_j − λ/β̂_j² on an orthonormal design
        let expect = (0..2)
            .map(|j| beta[j] / init[j] - lambda / (init[j] * init[j]))
            .fold(f64::INFINITY, f64::min);
        assert!((g.underselection_margin - expect).abs() < 1e-12);
        assert!((g.overselection_margin - lambda).abs() < 1e-12);
        let a = certify_alasso(&d, init.view(), &truth, lambda, noise.view()).unwrap();
        assert!(a.recovers_signs());
    }

    #[test]
    fn large_lambda_breaks_underselection() {
        let d = random_dataset(30, 5, 9).standardize().unwrap();
        let beta = array![1.0, 0.0, 0.0, 1.3, 0.0];
        let truth = TrueModel::new(beta.clone(), 0.25).unwrap();
        let noise = d.y() - &d.x().dot(&beta);
        let init = crate::initial::fit_ols(&d).unwrap().beta;
        let lmax = garrote_lambda_max(&d, init.view());
        let g = certify_garrote(&d, init.view(), &truth, lmax * 1.01, noise.view()).unwrap();
        assert!(!g.no_underselection);
        let amax = crate::selectors::alasso_lambda_max(&d, init.view(), 1.0);
        let a = certify_alasso(&d, init.view(), &truth, amax * 1.01, noise.view()).unwrap();
        assert!(!a.no_underselection);
    }

    #[test]
    fn garrote_cannot_fix_wrong_init_sign() {
        let x = orthonormal_design(40, 3, 7);
        let beta = array![2.0, 0.0, 0.0];
        let d = Dataset::new(x.clone(), x.dot(&beta)).unwrap();
        let truth = TrueModel::new(beta, 1.0).unwrap();
        let init = array![-1.0, 0.0, 0.0];
        let noise = Array1::zeros(40);
        let g = certify_garrote(&d, init.view(), &truth, 0.1, noise.view()).unwrap();
        assert!(!g.no_underselection);
        assert!(!g.init_signs_agree);
        // the adaptive Lasso flips d to recover the sign
        let a = certify_alasso(&d, init.view(), &truth, 0.1, noise.view()).unwrap();
        assert!(a.recovers_signs());
    }

    #[test]
    fn certificates_agree_with_solver() {
        let mut checked = 0;
        for seed in 0..200u64 {
            let d = random_dataset(25, 5, 100 + seed).standardize().unwrap();
            let beta = array![1.0, 0.0, 0.0, 1.3, 0.0];
            let truth = TrueModel::new(beta.clone(), 0.25).unwrap();
            let noise = d.y() - &d.x().dot(&beta);
            let init = crate::initial::fit_ols(&d).unwrap().beta;
            let truth_signs = truth.signs();
            for lambda in [0.3, 0.1, 0.03, 0.01, 0.003] {
                let g = certify_garrote(&d, init.view(), &truth, lambda, noise.view()).unwrap();
                let sol = garrote_fit(&d, init.view(), lambda).unwrap();
                let got = crate::data::sign_pattern(sol.beta_ng.view(), crate::data::SUPPORT_EPS);
                assert_eq!(g.recovers_signs(), got == truth_signs, "garrote seed {seed} λ {lambda}");
                let a = certify_alasso(&d, init.view(), &truth, lambda, noise.view()).unwrap();
                let b = alasso_fit(&d, init.view(), lambda, 1.0).unwrap();
                let got = crate::data::sign_pattern(b.view(), crate::data::SUPPORT_EPS);
                assert_eq!(a.recovers_signs(), got == truth_signs, "alasso seed {seed} λ {lambda}");
                checked += 1;
            }
        }
        assert_eq!(checked, 1000);
    }

    #[test]
    fn assumption2_examples() {
        let d = random_dataset(20, 4, 10);
        let r = assumption2_report(&d, array![1.0, -2.0, 0.5, 0.0].view()).unwrap();
        assert_eq!(r.q, 4);
        assert_eq!(r.xi_hat, 0.0);

        // n = 2, p = 3: β* orthogonal to both rows
        let x = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let d = Dataset::design_only(x.clone()).unwrap();
        let null = array![1.0, 1.0, -1.0] / 3f64.sqrt();
        let r = assumption2_report(&d, null.view()).unwrap();
        assert_eq!(r.q, 2);
        assert!((r.xi_hat - norm_inf(null.view())).abs() < 1e-12);

        // β* in the row space
        let row = x.slice(s![0, ..]).to_owned() * 2.0 - x.slice(s![1, ..]).to_owned();
        let r = assumption2_report(&d, row.view()).unwrap();
        assert!(r.xi_hat <= 1e-10);
    }

    #[test]
    fn oracle_variance_examples() {
        let d = Dataset::design_only(orthonormal_design(10, 3, 1)).unwrap();
        let s = supp(&[0, 1, 2], 3);
        assert!((oracle_variance(&d, &s, 1.0, array![1.0, 0.0, 0.0].view()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(oracle_variance(&d, &s, 1.0, Array1::zeros(3).view()).unwrap(), 0.0);
        assert!(oracle_variance(&d, &s, 1.0, array![1.0, 1.0, 0.0].view()).is_err());

        // (1/n) XᵀX = [[1, 0.5], [0.5, 1]] with n = 2
        let l = array![[1.0, 0.0], [0.5, 0.75f64.sqrt()]];
        let x: Array2<f64> = l.t().to_owned() * 2f64.sqrt();
        let d = Dataset::design_only(x).unwrap();
        let w2 = oracle_variance(&d, &supp(&[0, 1], 2), 1.0, array![1.0, 0.0].view()).unwrap();
        assert!((w2 - 4.0 / 3.0).abs() < 1e-12, "{w2}");
    }
}
