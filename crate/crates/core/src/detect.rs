//! Matrix-level data generation and the detector statistics computed from
//! `(x, X_t, v)`. This is the ground-truth path the fast sampler is checked
//! against.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkit::{chol, dot, norm_sqr, CMatrix, LowerFactor};
use crate::randkit::{gram, standard_cnormal_mat, standard_cnormal_vec};
use crate::scalar::{Cx, Real};

/// The maximal-invariant pair `(β, t̃)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisPoint<T> {
    /// Loss factor `1/(1 + s₁ − s₂)`, in `(0, 1]`.
    pub beta: T,
    /// Kelly statistic `s₂/(1 + s₁ − s₂)`.
    pub t_tilde: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorKind {
    Kelly,
    Amf,
    Kalson { kappa: f64 },
}

impl DetectorKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Kalson { kappa } if !(kappa > 0.0) || !kappa.is_finite() => Err(
                Error::InvalidArgument(format!("Kalson kappa = {kappa} must be positive")),
            ),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Kelly => "kelly".into(),
            Self::Amf => "amf".into(),
            Self::Kalson { kappa } => format!("kalson({kappa})"),
        }
    }

    /// `κ` of the equivalent Kalson detector (Kelly is `κ = 1`), if any.
    pub fn kappa(&self) -> Option<f64> {
        match *self {
            Self::Kelly => Some(1.0),
            Self::Amf => None,
            Self::Kalson { kappa } => Some(kappa),
        }
    }
}

/// `β = 1/(1 + s₁ − s₂)`, `t̃ = s₂/(1 + s₁ − s₂)`.
pub fn mis_point<T: Real>(s1: T, s2: T) -> MisPoint<T> {
    let denom = T::one() + s1 - s2;
    MisPoint {
        beta: denom.recip(),
        t_tilde: s2 / denom,
    }
}

/// Detector statistic from the invariant pair: Kelly `t̃`, AMF `t̃/β`,
/// Kalson `t̃/(1 + β(κ − 1))`.
#[inline]
pub fn stat_value<T: Real>(kind: DetectorKind, p: MisPoint<T>) -> T {
    match kind {
        DetectorKind::Kelly => p.t_tilde,
        DetectorKind::Amf => p.t_tilde / p.beta,
        DetectorKind::Kalson { kappa } => {
            p.t_tilde / (T::one() + p.beta * (T::lit(kappa) - T::one()))
        }
    }
}

/// Kalson statistic in its raw form `s₂/(κ + s₁ − s₂)`.
pub fn kalson_from_raw<T: Real>(s1: T, s2: T, kappa: T) -> T {
    s2 / (kappa + s1 - s2)
}

/// Bose–Steinhardt coordinates `(ρ, η) = (β, 1/(1 + t̃))`.
pub fn bose_convert<T: Real>(p: MisPoint<T>) -> (T, T) {
    (p.beta, (T::one() + p.t_tilde).recip())
}

/// `(s₁, s₂)` with `S_t = X_t·X_tᴴ`, computed through Cholesky solves.
pub fn raw_stats<T: Real>(x: &[Cx<T>], x_t: &CMatrix<T>, v: &[Cx<T>]) -> Result<(T, T)> {
    let n = x.len();
    if x_t.rows() != n || v.len() != n {
        return Err(Error::Dimension(format!(
            "x has {n} entries, X_t has {} rows, v has {}",
            x_t.rows(),
            v.len()
        )));
    }
    if x_t.cols() < n {
        return Err(Error::InvalidArgument(format!(
            "K = {} < N = {n}: sample covariance is singular",
            x_t.cols()
        )));
    }
    let s = x_t.matmul(&x_t.adjoint()).hermitian_part();
    raw_stats_from_scm(x, &chol(&s)?, v)
}

/// `(s₁, s₂)` given the Cholesky factor of `S_t`.
pub fn raw_stats_from_scm<T: Real>(
    x: &[Cx<T>],
    scm: &LowerFactor<T>,
    v: &[Cx<T>],
) -> Result<(T, T)> {
    let a = scm.solve_lower(x);
    let b = scm.solve_lower(v);
    let s1 = norm_sqr(&a);
    let s2 = dot(&b, &a).norm_sqr() / norm_sqr(&b);
    // Cauchy–Schwarz: clamp rounding excess.
    Ok((s1, s2.min(s1)))
}

/// Precomputed factors for repeated direct-path draws under one `(Σ, Σ_t)`.
#[derive(Clone, Debug)]
pub struct DirectModel {
    pub sigma_root: LowerFactor<f64>,
    pub sigma_t_root: LowerFactor<f64>,
    pub v: Vec<Complex64>,
    pub alpha_abs: f64,
    pub k: usize,
}

impl DirectModel {
    pub fn new(
        sigma: &CMatrix<f64>,
        sigma_t: &CMatrix<f64>,
        v: &[Complex64],
        alpha_abs: f64,
        k: usize,
    ) -> Result<Self> {
        let n = v.len();
        if k < n {
            return Err(Error::InvalidArgument(format!("K = {k} < N = {n}")));
        }
        if !(alpha_abs >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "|alpha| = {alpha_abs} must be >= 0"
            )));
        }
        Ok(Self {
            sigma_root: chol(sigma)?,
            sigma_t_root: chol(sigma_t)?,
            v: v.to_vec(),
            alpha_abs,
            k,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `x = α·v + Σ^{1/2}u` and `X_t = Σ_t^{1/2}Z`.
    pub fn gen_data<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<Complex64>, CMatrix<f64>) {
        self.gen_data_with_phase(rng, Complex64::new(1.0, 0.0))
    }

    /// Same draw with the amplitude rotated by a unit-modulus `phase`.
    pub fn gen_data_with_phase<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        phase: Complex64,
    ) -> (Vec<Complex64>, CMatrix<f64>) {
        let n = self.dim();
        let u = standard_cnormal_vec(rng, n);
        let noise = self.sigma_root.apply(&u);
        let alpha = phase * self.alpha_abs;
        let x = noise
            .iter()
            .zip(&self.v)
            .map(|(e, vi)| e + alpha * vi)
            .collect();
        let z = standard_cnormal_mat(rng, n, self.k);
        let x_t = self.sigma_t_root.matrix().matmul(&z);
        (x, x_t)
    }

    /// One direct-path invariant pair.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MisPoint<f64>> {
        let (x, x_t) = self.gen_data(rng);
        let scm = chol(&gram(&x_t))?;
        let (s1, s2) = raw_stats_from_scm(&x, &scm, &self.v)?;
        Ok(mis_point(s1, s2))
    }
}

/// Convenience wrapper: one `(x, X_t)` draw for `(Σ, Σ_t, |α|, v, K)`.
pub fn gen_data<R: Rng + ?Sized>(
    rng: &mut R,
    sigma: &CMatrix<f64>,
    sigma_t: &CMatrix<f64>,
    alpha_abs: f64,
    v: &[Complex64],
    k: usize,
) -> Result<(Vec<Complex64>, CMatrix<f64>)> {
    Ok(DirectModel::new(sigma, sigma_t, v, alpha_abs, k)?.gen_data(rng))
}
