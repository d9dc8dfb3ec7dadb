//! Fast exact samplers of `(β, t̃)` built on the stochastic representation
//! under covariance mismatch.
//!
//! Per draw, with `x̃₁ = L₁₁u`, `L₁₁L₁₁ᴴ = Ω₁₁`:
//!
//! ```text
//! β  = 1 / (1 + ‖x̃₁‖² / Cχ²_{K−N+2})
//! c  = 1 + β(Ω₂.₁ − 1)
//! δ  = β·|√γ_t + Ω₂₁Ω₁₁⁻¹x̃₁|² / c
//! t̃ = c · Cχ²₁(δ) / Cχ²_{K−N+1}
//! ```
//!
//! The quadratic form `x̃₁ᴴW₁₁⁻¹x̃₁` is drawn as `‖x̃₁‖²/Cχ²_{K−N+2}` given
//! `x̃₁`, which is exact by unitary invariance of `W₁₁ ~ CW_{N−1}(K, I)`, so
//! no Wishart matrix is ever formed.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::detect::{DirectModel, MisPoint};
use crate::error::{Error, Result};
use crate::matkit::{hermitian_sqrt, CMatrix};
use crate::mismatch::{omega_decompose, OmegaSummary};
use crate::randkit::{noncentral_unit, standard_cnormal, Stream};

/// Anything that yields invariant pairs: the fast samplers and the direct path.
pub trait PairSource: Sync {
    fn draw(&self, rng: &mut Stream) -> Result<MisPoint<f64>>;
}

/// Largest `N` the fast sampler handles (stack buffer size).
pub const MAX_DIM: usize = 65;

fn gamma_dist(shape: usize) -> Gamma<f64> {
    Gamma::new(shape as f64, 1.0).expect("positive integer shape")
}

/// Sampler for the general (non-GER) representation.
#[derive(Clone, Debug)]
pub struct RepSampler {
    pub n: usize,
    pub k: usize,
    /// Eigenvalues of `Ω₁₁`.
    pub lambda: Vec<f64>,
    /// Square-root `F` of `Ω₁₁` used to draw `x̃₁ = F·u` (row-major, `(N−1)²`).
    factor: CMatrix<f64>,
    factor_is_lower: bool,
    /// Row `Ω₂₁Ω₁₁⁻¹`.
    pub w: Vec<Complex64>,
    /// `w·F`, so that `Ω₂₁Ω₁₁⁻¹x̃₁ = wf·u`.
    wf: Vec<Complex64>,
    /// `Ω₂.₁`.
    pub r: f64,
    /// `|α|²·vᴴΣ_t⁻¹v`.
    pub gamma_t: f64,
    beta_den: Gamma<f64>,
    t_den: Gamma<f64>,
}

impl RepSampler {
    /// Builds the sampler from an `Ω` summary and the signal amplitude.
    pub fn from_summary(om: &OmegaSummary<f64>, k: usize, alpha_abs: f64) -> Result<Self> {
        let n = om.lambda.len() + 1;
        if n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "fast sampler supports N <= {MAX_DIM}, got {n}"
            )));
        }
        if k < n {
            return Err(Error::InvalidArgument(format!("K = {k} < N = {n}")));
        }
        if !(alpha_abs >= 0.0) || !alpha_abs.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "|alpha| = {alpha_abs} must be finite and >= 0"
            )));
        }
        if !(om.schur > 0.0) {
            return Err(Error::Internal(format!(
                "Schur complement {} is not positive",
                om.schur
            )));
        }
        let mut s = Self {
            n,
            k,
            lambda: om.lambda.clone(),
            factor: CMatrix::zeros(0, 0),
            factor_is_lower: true,
            w: om.w.clone(),
            wf: Vec::new(),
            r: om.schur,
            gamma_t: alpha_abs * alpha_abs * om.vt_quad,
            beta_den: gamma_dist(k - n + 2),
            t_den: gamma_dist(k - n + 1),
        };
        s.set_factor(om.omega11_factor.matrix().clone(), true);
        Ok(s)
    }

    /// Replaces the Cholesky factor of `Ω₁₁` by its Hermitian square root.
    /// The sampled distribution is unchanged.
    pub fn with_hermitian_root(mut self, om: &OmegaSummary<f64>) -> Result<Self> {
        let root = hermitian_sqrt(&om.omega11)?;
        self.set_factor(root, false);
        Ok(self)
    }

    fn set_factor(&mut self, factor: CMatrix<f64>, lower: bool) {
        let m = factor.rows();
        self.wf = (0..m)
            .map(|j| {
                (0..m).fold(Complex64::new(0.0, 0.0), |acc, i| {
                    acc + self.w[i] * factor[(i, j)]
                })
            })
            .collect();
        self.factor = factor;
        self.factor_is_lower = lower;
    }

    /// Draws one `(β, t̃)`.
    #[inline]
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> MisPoint<f64> {
        let m = self.n - 1;
        let mut buf = [Complex64::new(0.0, 0.0); MAX_DIM - 1];
        let u = &mut buf[..m];
        for z in u.iter_mut() {
            *z = standard_cnormal(rng);
        }
        let mut x1_norm = 0.0;
        for i in 0..m {
            let row = self.factor.row(i);
            let len = if self.factor_is_lower { i + 1 } else { m };
            let xi = row[..len]
                .iter()
                .zip(&u[..len])
                .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b);
            x1_norm += xi.norm_sqr();
        }
        let proj = self
            .wf
            .iter()
            .zip(u.iter())
            .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b);

        let g = self.beta_den.sample(rng);
        let beta = 1.0 / (1.0 + x1_norm / g);
        let c = 1.0 + beta * (self.r - 1.0);
        let delta = beta * (proj + self.gamma_t.sqrt()).norm_sqr() / c;
        let num = noncentral_unit(rng, delta);
        let den = self.t_den.sample(rng);
        MisPoint {
            beta,
            t_tilde: c * num / den,
        }
    }
}

impl PairSource for RepSampler {
    fn draw(&self, rng: &mut Stream) -> Result<MisPoint<f64>> {
        Ok(self.sample_pair(rng))
    }
}

/// `RepSampler` for `(Σ, Σ_t, v, |α|)` with `K` training snapshots.
pub fn make_sampler(
    sigma: &CMatrix<f64>,
    sigma_t: &CMatrix<f64>,
    v: &[Complex64],
    alpha_abs: f64,
    k: usize,
) -> Result<RepSampler> {
    RepSampler::from_summary(&omega_decompose(sigma, sigma_t, v)?, k, alpha_abs)
}

/// Sampler for the simpler representation valid when the GER holds (`Ω₂₁ = 0`).
#[derive(Clone, Debug)]
pub struct GerSampler {
    pub n: usize,
    pub k: usize,
    sqrt_lambda: Vec<f64>,
    pub r: f64,
    pub gamma_t: f64,
    beta_den: Gamma<f64>,
    t_den: Gamma<f64>,
}

impl GerSampler {
    pub fn new(lambda: &[f64], r: f64, gamma_t: f64, n: usize, k: usize) -> Result<Self> {
        if lambda.len() + 1 != n {
            return Err(Error::Dimension(format!(
                "{} eigenvalues for N = {n}",
                lambda.len()
            )));
        }
        if k < n {
            return Err(Error::InvalidArgument(format!("K = {k} < N = {n}")));
        }
        if lambda.iter().any(|&l| !(l > 0.0)) || !(r > 0.0) || !(gamma_t >= 0.0) {
            return Err(Error::InvalidArgument(
                "lambda and r must be positive, gamma_t >= 0".into(),
            ));
        }
        Ok(Self {
            n,
            k,
            sqrt_lambda: lambda.iter().map(|l| l.sqrt()).collect(),
            r,
            gamma_t,
            beta_den: gamma_dist(k - n + 2),
            t_den: gamma_dist(k - n + 1),
        })
    }

    #[inline]
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> MisPoint<f64> {
        let x1_norm: f64 = self
            .sqrt_lambda
            .iter()
            .map(|s| (standard_cnormal(rng) * s).norm_sqr())
            .sum();
        let g = self.beta_den.sample(rng);
        let beta = 1.0 / (1.0 + x1_norm / g);
        let c = 1.0 + beta * (self.r - 1.0);
        let num = noncentral_unit(rng, beta * self.gamma_t / c);
        let den = self.t_den.sample(rng);
        MisPoint {
            beta,
            t_tilde: c * num / den,
        }
    }
}

impl PairSource for GerSampler {
    fn draw(&self, rng: &mut Stream) -> Result<MisPoint<f64>> {
        Ok(self.sample_pair(rng))
    }
}

/// One draw of the GER representation.
pub fn sample_pair_ger<R: Rng + ?Sized>(rng: &mut R, sampler: &GerSampler) -> MisPoint<f64> {
    sampler.sample_pair(rng)
}

/// One draw of the general representation.
pub fn sample_pair<R: Rng + ?Sized>(rng: &mut R, sampler: &RepSampler) -> MisPoint<f64> {
    sampler.sample_pair(rng)
}

impl PairSource for DirectModel {
    fn draw(&self, rng: &mut Stream) -> Result<MisPoint<f64>> {
        self.sample_pair(rng)
    }
}
