//! Training-covariance generators, the generalized-eigenrelation check and
//! the whitened/rotated geometry `Ω` that drives the fast sampler.

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkit::{
    chol, dot, heig, hermitian_sqrt, norm_sqr, ortho_complement, solve_hpd, CMatrix, LowerFactor,
};
use crate::randkit::{gram, sample_cwishart, CChiSquare};
use crate::scalar::{Cx, Real};

/// How `Σ_t` is generated from `Σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum MismatchSpec {
    /// `Σ_t = Σ`.
    Identity,
    /// `Σ_t = Σ^{1/2}·W_t⁻¹·Σ^{H/2}`, `W_t ~ CW_N(ν, μ⁻¹I)`, `E[W_t⁻¹] = γI`.
    InvWishart {
        delta_db: f64,
        /// Wishart degrees of freedom; `2N` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<usize>,
    },
    /// Same eigenvectors as `Σ`, eigenvalues scaled by independent `γ_n`.
    EigJitter { delta_db: f64 },
    /// Cholesky-sandwich construction satisfying the GER.
    GerChol {
        delta_db: f64,
        /// Degrees of freedom of `Ψ₁₁`; `2N` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu1: Option<usize>,
        /// Degrees of freedom of `Ψ₂₂`; `2N` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m2: Option<usize>,
        /// Pins `Ψ₂₂` to this value instead of drawing it (`Ψ₂₂ = Ω₂.₁`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        psi22: Option<f64>,
    },
    /// Eigenvalue mismatch with `Λ^{-1/2}Uᴴv` kept as an eigenvector, satisfying the GER.
    GerEig { delta_db: f64 },
}

impl MismatchSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::InvWishart { .. } => "inv_wishart",
            Self::EigJitter { .. } => "eig_jitter",
            Self::GerChol { .. } => "ger_chol",
            Self::GerEig { .. } => "ger_eig",
        }
    }

    pub fn delta_db(&self) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::InvWishart { delta_db, .. }
            | Self::EigJitter { delta_db }
            | Self::GerChol { delta_db, .. }
            | Self::GerEig { delta_db } => delta_db,
        }
    }

    /// True for the families constructed to satisfy the GER (including `Identity`).
    pub fn enforces_ger(&self) -> bool {
        matches!(
            self,
            Self::Identity | Self::GerChol { .. } | Self::GerEig { .. }
        )
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let delta = self.delta_db();
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta_db = {delta} must be finite and >= 0"
            )));
        }
        match *self {
            Self::InvWishart { nu, .. } => {
                let nu = nu.unwrap_or(2 * n);
                if nu <= n {
                    return Err(Error::InvalidArgument(format!(
                        "inverse-Wishart nu = {nu} must exceed N = {n}"
                    )));
                }
            }
            Self::GerChol { nu1, m2, psi22, .. } => {
                let nu1 = nu1.unwrap_or(2 * n);
                let m2 = m2.unwrap_or(2 * n);
                if nu1 < n {
                    return Err(Error::InvalidArgument(format!(
                        "nu1 = {nu1} must exceed N - 1 = {}",
                        n - 1
                    )));
                }
                if m2 < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "m2 = {m2} must be at least 2"
                    )));
                }
                if let Some(p) = psi22 {
                    if !(p > 0.0) || !p.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "pinned psi22 = {p} must be positive"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Every scalar drawn while generating one `Σ_t` (linear scale, not dB).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DrawMeta {
    /// Global scale `γ` (inverse-Wishart and Cholesky-GER families).
    pub gamma: Option<f64>,
    /// Per-eigenvalue factors `γ_n` (eigenvalue jitter), in descending-eigenvalue order.
    pub gamma_n: Vec<f64>,
    /// `ℓ₁(n)` of the eigenvalue GER family.
    pub ell1: Vec<f64>,
    /// `ℓ₂` of the eigenvalue GER family.
    pub ell2: Option<f64>,
    /// `Ψ₂₂` of the Cholesky GER family.
    pub psi22: Option<f64>,
}

impl DrawMeta {
    /// Scalars drawn per entry (`γ_n` or `ℓ₁`), whichever the family uses.
    pub fn vector_scalars(&self) -> &[f64] {
        if self.gamma_n.is_empty() {
            &self.ell1
        } else {
            &self.gamma_n
        }
    }
}

/// `10^{u/10}` with `u ~ U[−Δ, Δ]`; always consumes exactly one uniform.
fn uniform_db_scale<R: Rng + ?Sized>(rng: &mut R, delta_db: f64) -> f64 {
    let u: f64 = rng.random();
    10f64.powf((2.0 * u - 1.0) * delta_db / 10.0)
}

/// `B⁻ᴴ` for a lower factor `B`.
fn inverse_adjoint(f: &LowerFactor<f64>) -> CMatrix<f64> {
    f.solve_lower_mat(&CMatrix::identity(f.dim())).adjoint()
}

/// Draws one training covariance.
pub fn gen_sigma_t<R: Rng + ?Sized>(
    rng: &mut R,
    sigma: &CMatrix<f64>,
    v: &[Complex64],
    spec: &MismatchSpec,
) -> Result<(CMatrix<f64>, DrawMeta)> {
    let n = sigma.rows();
    if v.len() != n || !sigma.is_square() {
        return Err(Error::Dimension(format!(
            "Σ is {}x{}, v has length {}",
            sigma.rows(),
            sigma.cols(),
            v.len()
        )));
    }
    spec.validate(n)?;
    let mut meta = DrawMeta::default();
    let sigma_t = match *spec {
        MismatchSpec::Identity => sigma.clone(),

        MismatchSpec::InvWishart { delta_db, nu } => {
            let nu = nu.unwrap_or(2 * n);
            let gamma = uniform_db_scale(rng, delta_db);
            meta.gamma = Some(gamma);
            let mu = gamma * (nu - n) as f64;
            let scale = chol(&CMatrix::identity(n).scale(1.0 / mu))?;
            let w = sample_cwishart(rng, nu, &scale)?;
            let root = chol(sigma)?;
            // Σ_t = L·W⁻¹·Lᴴ = (L·M⁻ᴴ)(L·M⁻ᴴ)ᴴ with W = M·Mᴴ.
            let m = chol(&w)?;
            gram(&root.matrix().matmul(&inverse_adjoint(&m)))
        }

        MismatchSpec::EigJitter { delta_db } => {
            let eig = heig(sigma)?;
            let gamma_n: Vec<f64> = (0..n).map(|_| uniform_db_scale(rng, delta_db)).collect();
            let b = CMatrix::from_fn(n, n, |i, j| {
                eig.vectors[(i, j)] * (eig.values[j] * gamma_n[j]).sqrt()
            });
            meta.gamma_n = gamma_n;
            gram(&b)
        }

        MismatchSpec::GerChol {
            delta_db,
            nu1,
            m2,
            psi22,
        } => {
            let nu1 = nu1.unwrap_or(2 * n);
            let m2 = m2.unwrap_or(2 * n);
            let gamma = uniform_db_scale(rng, delta_db);
            meta.gamma = Some(gamma);
            let q_v = steering_basis(v)?;
            let c = chol(&q_v.adjoint().matmul(sigma).matmul(&q_v).hermitian_part())?;
            let a = 1.0 / (gamma * (nu1 + 1 - n) as f64);
            let psi11 = sample_cwishart(rng, nu1, &chol(&CMatrix::identity(n - 1).scale(a))?)?;
            let drawn = CChiSquare::central(m2 as u32)?.sample(rng) / (gamma * (m2 - 1) as f64);
            let psi22 = psi22.unwrap_or(drawn);
            meta.psi22 = Some(psi22);
            // blkdiag(Ψ₁₁⁻¹, Ψ₂₂⁻¹) = D·Dᴴ with D = blkdiag(P⁻ᴴ, Ψ₂₂^{-1/2}), Ψ₁₁ = P·Pᴴ.
            let p_inv_adj = inverse_adjoint(&chol(&psi11)?);
            let mut d = CMatrix::zeros(n, n);
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    d[(i, j)] = p_inv_adj[(i, j)];
                }
            }
            d[(n - 1, n - 1)] = Complex64::new(psi22.powf(-0.5), 0.0);
            gram(&q_v.matmul(c.matrix()).matmul(&d))
        }

        MismatchSpec::GerEig { delta_db } => {
            let eig = heig(sigma)?;
            let v_perp = ortho_complement(v)?;
            let f = chol(
                &v_perp
                    .adjoint()
                    .matmul(sigma)
                    .matmul(&v_perp)
                    .hermitian_part(),
            )?;
            let uh = eig.vectors.adjoint();
            let sqrt_l: Vec<f64> = eig.values.iter().map(|l| l.sqrt()).collect();
            let first = CMatrix::from_fn(n, n, |i, j| uh[(i, j)] * sqrt_l[i])
                .matmul(&v_perp)
                .matmul(&inverse_adjoint(&f));
            let mut last: Vec<Complex64> = uh
                .mat_vec(v)
                .iter()
                .zip(&sqrt_l)
                .map(|(z, s)| z / s)
                .collect();
            let norm = norm_sqr(&last).sqrt();
            last.iter_mut().for_each(|z| *z /= norm);
            let mut cols: Vec<Vec<Complex64>> = (0..n - 1).map(|j| first.col(j)).collect();
            cols.push(last);
            let basis = CMatrix::from_columns(&cols)?;

            let ell1: Vec<f64> = (0..n - 1)
                .map(|_| uniform_db_scale(rng, delta_db))
                .collect();
            let ell2 = uniform_db_scale(rng, delta_db);
            let inv_root: Vec<f64> = ell1
                .iter()
                .chain(std::iter::once(&ell2))
                .map(|l| l.powf(-0.5))
                .collect();
            // Σ_t = U·Λ^{1/2}·V·diag(ℓ)⁻¹·Vᴴ·Λ^{1/2}·Uᴴ = B·Bᴴ.
            let u_sqrt_l = CMatrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] * sqrt_l[j]);
            let b = u_sqrt_l.matmul(&CMatrix::from_fn(n, n, |i, j| basis[(i, j)] * inv_root[j]));
            meta.ell1 = ell1;
            meta.ell2 = Some(ell2);
            gram(&b)
        }
    };
    Ok((sigma_t, meta))
}

/// `[V⊥ v]`: unitary basis whose last column is the steering vector.
pub fn steering_basis<T: Real>(v: &[Cx<T>]) -> Result<CMatrix<T>> {
    let v_perp = ortho_complement(v)?;
    let n = v.len();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if j + 1 < n {
            v_perp[(i, j)]
        } else {
            v[i]
        }
    }))
}

/// Outcome of the generalized-eigenrelation test `Σ_t⁻¹v = λ·Σ⁻¹v`.
#[derive(Clone, Debug, PartialEq)]
pub struct GerReport<T> {
    /// `‖a − (bᴴa/bᴴb)·b‖ / ‖a‖` for `a = Σ_t⁻¹v`, `b = Σ⁻¹v`.
    pub residual: T,
    pub lambda: T,
    pub holds: bool,
}

pub fn check_ger<T: Real>(
    sigma: &CMatrix<T>,
    sigma_t: &CMatrix<T>,
    v: &[Cx<T>],
    tol: T,
) -> Result<GerReport<T>> {
    let col = CMatrix::from_columns(&[v.to_vec()])?;
    let a = solve_hpd(sigma_t, &col)?.col(0);
    let b = solve_hpd(sigma, &col)?.col(0);
    let coef = dot(&b, &a) / dot(&b, &b).re;
    let resid: Vec<Cx<T>> = a.iter().zip(&b).map(|(&ai, &bi)| ai - bi * coef).collect();
    let residual = (norm_sqr(&resid) / norm_sqr(&a)).sqrt().min(T::one());
    Ok(GerReport {
        residual,
        lambda: coef.re,
        holds: residual < tol,
    })
}

/// Square-root convention used for `Σ_t^{1/2}` and `F_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SqrtKind {
    #[default]
    Cholesky,
    Hermitian,
}

enum Root<T> {
    Lower(LowerFactor<T>),
    Herm(CMatrix<T>),
}

impl<T: Real> Root<T> {
    fn new(a: &CMatrix<T>, kind: SqrtKind) -> Result<Self> {
        Ok(match kind {
            SqrtKind::Cholesky => Self::Lower(chol(a)?),
            SqrtKind::Hermitian => Self::Herm(hermitian_sqrt(a)?),
        })
    }

    fn matrix(&self) -> &CMatrix<T> {
        match self {
            Self::Lower(l) => l.matrix(),
            Self::Herm(h) => h,
        }
    }

    /// `R⁻¹·B`.
    fn solve(&self, b: &CMatrix<T>) -> Result<CMatrix<T>> {
        match self {
            Self::Lower(l) => Ok(l.solve_lower_mat(b)),
            Self::Herm(h) => solve_hpd(h, b),
        }
    }
}

/// Mismatch geometry after whitening by `Σ_t^{1/2}` and rotating `v` onto `e_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSummary<T> {
    /// Eigenvalues of `Ω₁₁`, descending.
    pub lambda: Vec<T>,
    pub omega11: CMatrix<T>,
    pub omega11_factor: LowerFactor<T>,
    /// Entries of the row `Ω₂₁Ω₁₁⁻¹`.
    pub w: Vec<Cx<T>>,
    /// Schur complement `Ω₂.₁ = Ω₂₂ − Ω₂₁Ω₁₁⁻¹Ω₁₂`.
    pub schur: T,
    /// `vᴴΣ_t⁻¹v`.
    pub vt_quad: T,
    /// `vᴴΣ⁻¹v`.
    pub v_quad: T,
    /// `Ω₂.₁` recomputed as `vᴴΣ_t⁻¹v / vᴴΣ⁻¹v`.
    pub ratio: T,
    /// `‖QᴴQ − I‖_F` of the rotation actually used.
    pub unitarity_error: T,
}

impl<T: Real> OmegaSummary<T> {
    /// `Ω₂₁Ω₁₁⁻¹·x` for a vector `x` of length `N − 1`.
    pub fn apply_w(&self, x: &[Cx<T>]) -> Cx<T> {
        self.w
            .iter()
            .zip(x)
            .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// `‖w‖²`.
    pub fn w_norm_sqr(&self) -> T {
        norm_sqr(&self.w)
    }

    /// `w·Ω₁₁·wᴴ`, the variance of `Ω₂₁Ω₁₁⁻¹x̃₁`.
    pub fn w_quadratic(&self) -> T {
        let wc: Vec<Cx<T>> = self.w.iter().map(|z| z.conj()).collect();
        let ow = self.omega11.mat_vec(&wc);
        dot(&wc, &ow).re
    }
}

/// `Ω` and its partition for `(Σ, Σ_t, v)` with Cholesky square roots.
pub fn omega_decompose<T: Real>(
    sigma: &CMatrix<T>,
    sigma_t: &CMatrix<T>,
    v: &[Cx<T>],
) -> Result<OmegaSummary<T>> {
    omega_decompose_with(sigma, sigma_t, v, SqrtKind::Cholesky)
}

pub fn omega_decompose_with<T: Real>(
    sigma: &CMatrix<T>,
    sigma_t: &CMatrix<T>,
    v: &[Cx<T>],
    kind: SqrtKind,
) -> Result<OmegaSummary<T>> {
    let n = v.len();
    if sigma.rows() != n || sigma_t.rows() != n || !sigma.is_square() || !sigma_t.is_square() {
        return Err(Error::Dimension(
            "Σ, Σ_t and v must share dimension N".into(),
        ));
    }
    let v_perp = ortho_complement(v)?;
    let g_t = Root::new(sigma_t, kind)?;
    let f_t = Root::new(
        &v_perp
            .adjoint()
            .matmul(sigma_t)
            .matmul(&v_perp)
            .hermitian_part(),
        kind,
    )?;

    // Q = [G_tᴴ·V⊥·F_t⁻ᴴ, c·G_t⁻¹v], c = (vᴴΣ_t⁻¹v)^{-1/2}
    let f_inv_adj = f_t.solve(&CMatrix::identity(n - 1))?.adjoint();
    let q1 = g_t.matrix().adjoint().matmul(&v_perp).matmul(&f_inv_adj);
    let gv = g_t.solve(&CMatrix::from_columns(&[v.to_vec()])?)?.col(0);
    let vt_quad = norm_sqr(&gv);
    let c = vt_quad.sqrt().recip();
    let mut cols: Vec<Vec<Cx<T>>> = (0..n - 1).map(|j| q1.col(j)).collect();
    cols.push(gv.iter().map(|z| z * c).collect());
    let q = CMatrix::from_columns(&cols)?;
    let unitarity_error = q
        .adjoint()
        .matmul(&q)
        .sub(&CMatrix::identity(n))
        .frobenius_norm();
    if !(unitarity_error <= T::tol(1e-8)) {
        return Err(Error::Internal(format!(
            "rotation is not unitary: ‖QᴴQ − I‖ = {unitarity_error}"
        )));
    }

    // Ω = Qᴴ·G_t⁻¹·Σ·G_t⁻ᴴ·Q
    let gs = g_t.solve(sigma)?;
    let m = g_t.solve(&gs.adjoint())?;
    let omega = q.adjoint().matmul(&m).matmul(&q).hermitian_part();

    let omega11 = omega.block(0, n - 1, 0, n - 1);
    let omega12 = omega.col(n - 1)[..n - 1].to_vec();
    let omega22 = omega[(n - 1, n - 1)].re;
    let lambda = heig(&omega11)?.values;
    let omega11_factor = chol(&omega11)?;
    let y = omega11_factor.solve(&omega12);
    let w: Vec<Cx<T>> = y.iter().map(|z| z.conj()).collect();
    let schur = omega22 - dot(&omega12, &y).re;

    let v_quad = crate::scenario::whitened_energy(sigma, v)?;
    Ok(OmegaSummary {
        lambda,
        omega11,
        omega11_factor,
        w,
        schur,
        vt_quad,
        v_quad,
        ratio: vt_quad / v_quad,
        unitarity_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randkit::StreamKey;
    use crate::scenario::{build_cov, build_steering, ScenarioCfg};

    fn setup() -> (CMatrix<f64>, Vec<Complex64>) {
        let cfg = ScenarioCfg::default();
        (
            build_cov(&cfg).unwrap(),
            build_steering(cfg.n, cfg.fd).unwrap(),
        )
    }

    #[test]
    fn identity_returns_sigma() {
        let (s, v) = setup();
        let (st, meta) = gen_sigma_t(
            &mut StreamKey::new(1).stream(),
            &s,
            &v,
            &MismatchSpec::Identity,
        )
        .unwrap();
        assert_eq!(st, s);
        assert_eq!(meta, DrawMeta::default());
        let r = check_ger(&s, &st, &v, 1e-8).unwrap();
        assert!(r.residual < 1e-12 && (r.lambda - 1.0).abs() < 1e-12 && r.holds);
    }

    #[test]
    fn ger_scaling_case() {
        let (s, v) = setup();
        let r = check_ger(&s, &s.scale(2.0), &v, 1e-8).unwrap();
        assert!(r.residual < 1e-12);
        assert!((r.lambda - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_width_draws_reproduce_sigma() {
        let (s, v) = setup();
        for spec in [
            MismatchSpec::EigJitter { delta_db: 0.0 },
            MismatchSpec::GerEig { delta_db: 0.0 },
        ] {
            let (st, _) = gen_sigma_t(&mut StreamKey::new(2).stream(), &s, &v, &spec).unwrap();
            let err = st.sub(&s).frobenius_norm() / s.frobenius_norm();
            assert!(err < 1e-10, "{spec:?}: {err}");
        }
    }

    #[test]
    fn ger_families_satisfy_eigenrelation() {
        let (s, v) = setup();
        let specs = [
            MismatchSpec::GerChol {
                delta_db: 6.0,
                nu1: None,
                m2: None,
                psi22: None,
            },
            MismatchSpec::GerEig { delta_db: 6.0 },
        ];
        for spec in specs {
            for d in 0..10 {
                let (st, _) =
                    gen_sigma_t(&mut StreamKey::with_path(3, &[d]).stream(), &s, &v, &spec)
                        .unwrap();
                let r = check_ger(&s, &st, &v, 1e-8).unwrap();
                assert!(r.holds, "{spec:?} draw {d}: {}", r.residual);
            }
        }
    }

    #[test]
    fn ger_lambda_matches_drawn_scalars() {
        let (s, v) = setup();
        let spec = MismatchSpec::GerEig { delta_db: 6.0 };
        let (st, meta) = gen_sigma_t(&mut StreamKey::new(4).stream(), &s, &v, &spec).unwrap();
        let r = check_ger(&s, &st, &v, 1e-8).unwrap();
        assert!((r.lambda - meta.ell2.unwrap()).abs() < 1e-8 * r.lambda);
        assert_eq!(meta.ell1.len(), 15);

        let spec = MismatchSpec::GerChol {
            delta_db: 6.0,
            nu1: None,
            m2: None,
            psi22: None,
        };
        let (st, meta) = gen_sigma_t(&mut StreamKey::new(5).stream(), &s, &v, &spec).unwrap();
        let om = omega_decompose(&s, &st, &v).unwrap();
        assert!((om.schur - meta.psi22.unwrap()).abs() < 1e-9 * om.schur);
    }

    #[test]
    fn pinned_psi22_gives_unit_schur() {
        let (s, v) = setup();
        let spec = MismatchSpec::GerChol {
            delta_db: 6.0,
            nu1: None,
            m2: None,
            psi22: Some(1.0),
        };
        let (st, _) = gen_sigma_t(&mut StreamKey::new(6).stream(), &s, &v, &spec).unwrap();
        let om = omega_decompose(&s, &st, &v).unwrap();
        assert!((om.schur - 1.0).abs() < 1e-9);
        assert!((om.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_mismatch_omega_is_identity() {
        let (s, v) = setup();
        let om = omega_decompose(&s, &s, &v).unwrap();
        assert!(
            om.lambda.iter().all(|l| (l - 1.0).abs() < 1e-9),
            "{:?}",
            om.lambda
        );
        assert!(om.w_norm_sqr().sqrt() < 1e-9);
        assert!((om.schur - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_bad_dofs() {
        assert!(MismatchSpec::InvWishart {
            delta_db: 3.0,
            nu: Some(16)
        }
        .validate(16)
        .is_err());
        assert!(MismatchSpec::InvWishart {
            delta_db: 3.0,
            nu: Some(17)
        }
        .validate(16)
        .is_ok());
        assert!(MismatchSpec::GerChol {
            delta_db: 3.0,
            nu1: Some(15),
            m2: None,
            psi22: None
        }
        .validate(16)
        .is_err());
        assert!(MismatchSpec::GerChol {
            delta_db: 3.0,
            nu1: None,
            m2: Some(1),
            psi22: None
        }
        .validate(16)
        .is_err());
        assert!(MismatchSpec::EigJitter { delta_db: -1.0 }
            .validate(16)
            .is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: MismatchSpec =
            serde_json::from_str(r#"{"variant":"inv_wishart","delta_db":6.0}"#).unwrap();
        assert_eq!(
            spec,
            MismatchSpec::InvWishart {
                delta_db: 6.0,
                nu: None
            }
        );
        let spec: MismatchSpec = serde_json::from_str(r#"{"variant":"identity"}"#).unwrap();
        assert_eq!(spec, MismatchSpec::Identity);
        assert!(serde_json::from_str::<MismatchSpec>(
            r#"{"variant":"eig_jitter","delta_db":1,"nu":3}"#
        )
        .is_err());
        let back: MismatchSpec = serde_json::from_str(
            &serde_json::to_string(&MismatchSpec::GerChol {
                delta_db: 3.0,
                nu1: Some(20),
                m2: None,
                psi22: Some(1.0),
            })
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            back,
            MismatchSpec::GerChol {
                delta_db: 3.0,
                nu1: Some(20),
                m2: None,
                psi22: Some(1.0)
            }
        );
    }
}
