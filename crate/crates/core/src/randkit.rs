//! Reproducible random streams and the complex-Gaussian family of samplers
//! (circular normal, Wishart, chi-square, F), plus the closed-form CDFs the
//! calibration and validation code needs.
//!
//! Convention: a standard circular complex normal has `E|z|² = 1`, so the
//! central complex chi-square with `p` degrees of freedom is `Gamma(p, 1)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matkit::{CMatrix, LowerFactor};

/// Generator identifier echoed into result files.
pub const RNG_ALGORITHM: &str = "ChaCha12 keyed by SHA-256(domain, seed, path) [covmis-stream-v1]";

const DOMAIN: &[u8] = b"covmis-stream-v1";

/// The generator behind every [`StreamKey`].
pub type Stream = ChaCha12Rng;

/// Seed plus a domain-separation path; each distinct key owns an independent stream.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub path: Vec<u64>,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
        }
    }

    pub fn with_path(seed: u64, path: &[u64]) -> Self {
        Self {
            seed,
            path: path.to_vec(),
        }
    }

    /// Key one level deeper in the path.
    pub fn child(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self {
            seed: self.seed,
            path,
        }
    }

    /// 256-bit ChaCha key for this stream.
    pub fn key_bytes(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.seed.to_le_bytes());
        h.update((self.path.len() as u64).to_le_bytes());
        for label in &self.path {
            h.update(label.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn stream(&self) -> Stream {
        Stream::from_seed(self.key_bytes())
    }
}

/// One standard circular complex normal draw (`E|z|² = 1`).
#[inline]
pub fn standard_cnormal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn standard_cnormal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| standard_cnormal(rng)).collect()
}

/// `mean + G·u` with `u` standard circular, i.e. a draw from `CN(mean, G·Gᴴ)`.
pub fn sample_cnormal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &[Complex64],
    cov_factor: &LowerFactor<f64>,
) -> Result<Vec<Complex64>> {
    if mean.len() != cov_factor.dim() {
        return Err(Error::Dimension(format!(
            "mean has length {}, factor is {}x{}",
            mean.len(),
            cov_factor.dim(),
            cov_factor.dim()
        )));
    }
    let u = standard_cnormal_vec(rng, mean.len());
    Ok(cov_factor
        .apply(&u)
        .into_iter()
        .zip(mean)
        .map(|(g, m)| g + m)
        .collect())
}

/// `n × k` matrix with i.i.d. standard circular entries.
pub fn standard_cnormal_mat<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> CMatrix<f64> {
    CMatrix::from_fn(n, k, |_, _| standard_cnormal(rng))
}

/// `Z·Zᴴ` for `Z` of shape `n × k`, filled Hermitian.
pub fn gram(z: &CMatrix<f64>) -> CMatrix<f64> {
    let n = z.rows();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let zi = z.row(i);
        for j in 0..=i {
            let zj = z.row(j);
            let s = zi
                .iter()
                .zip(zj)
                .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj());
            out[(i, j)] = s;
            out[(j, i)] = s.conj();
        }
        out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
    }
    out
}

/// Complex Wishart `CW_n(k, G·Gᴴ)` draw as `G·(Z·Zᴴ)·Gᴴ`.
pub fn sample_cwishart<R: Rng + ?Sized>(
    rng: &mut R,
    dof: usize,
    scale_factor: &LowerFactor<f64>,
) -> Result<CMatrix<f64>> {
    let n = scale_factor.dim();
    if dof < n {
        return Err(Error::InvalidArgument(format!(
            "Wishart dof {dof} < dimension {n} gives a singular matrix"
        )));
    }
    let z = standard_cnormal_mat(rng, n, dof);
    let gz = scale_factor.matrix().matmul(&z);
    Ok(gram(&gz))
}

/// Complex chi-square `Cχ²_p(δ)`: `|CN(√δ, 1)|² + Gamma(p − 1, 1)` in the
/// noncentral case, `Gamma(p, 1)` in the central one.
#[derive(Clone, Copy, Debug)]
pub struct CChiSquare {
    dof: u32,
    delta: f64,
    gamma: Option<Gamma<f64>>,
}

impl CChiSquare {
    pub fn new(dof: u32, delta: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidArgument(
                "complex chi-square needs dof >= 1".into(),
            ));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noncentrality {delta} must be finite and >= 0"
            )));
        }
        let central_shape = if delta > 0.0 { dof - 1 } else { dof };
        let gamma = (central_shape > 0)
            .then(|| Gamma::new(f64::from(central_shape), 1.0).expect("positive shape"));
        Ok(Self { dof, delta, gamma })
    }

    pub fn central(dof: u32) -> Result<Self> {
        Self::new(dof, 0.0)
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Distribution<f64> for CChiSquare {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let central = self.gamma.map_or(0.0, |g| g.sample(rng));
        if self.delta > 0.0 {
            noncentral_unit(rng, self.delta) + central
        } else {
            central
        }
    }
}

/// `|√δ + z|²` with `z` standard circular: the one-dof noncentral term.
#[inline]
pub fn noncentral_unit<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> f64 {
    let z = standard_cnormal(rng);
    (z + delta.sqrt()).norm_sqr()
}

pub fn sample_cchi2<R: Rng + ?Sized>(rng: &mut R, dof: u32, delta: f64) -> Result<f64> {
    Ok(CChiSquare::new(dof, delta)?.sample(rng))
}

/// Complex F: `Cχ²_p(δ) / Cχ²_q(0)` without degree-of-freedom normalisation.
#[derive(Clone, Copy, Debug)]
pub struct CFisher {
    num: CChiSquare,
    den: CChiSquare,
}

impl CFisher {
    pub fn new(p: u32, q: u32, delta: f64) -> Result<Self> {
        Ok(Self {
            num: CChiSquare::new(p, delta)?,
            den: CChiSquare::central(q)?,
        })
    }
}

impl Distribution<f64> for CFisher {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.num.sample(rng) / self.den.sample(rng)
    }
}

pub fn sample_cf<R: Rng + ?Sized>(rng: &mut R, p: u32, q: u32, delta: f64) -> Result<f64> {
    Ok(CFisher::new(p, q, delta)?.sample(rng))
}

/// `P(U/V > t) = (1 + t)^{-q}` for `U ~ Cχ²₁(0)`, `V ~ Cχ²_q(0)`.
pub fn cf1_survival(t: f64, q: u32) -> f64 {
    (1.0 + t.max(0.0)).powi(-(q as i32))
}

/// Inverse of [`cf1_survival`]: the `t` with survival `p`.
pub fn cf1_quantile_upper(p: f64, q: u32) -> f64 {
    p.powf(-1.0 / f64::from(q)) - 1.0
}

/// Regularised incomplete beta `I_x(a, b)`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta parameters ({a}, {b}) must be positive"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "beta argument {x} outside [0, 1]"
        )));
    }
    Ok(statrs::function::beta::beta_reg(a, b, x))
}

/// Wilson score interval for `k` successes in `n` trials at confidence `level`.
pub fn wilson_ci(k: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= k <= n and n > 0, got k={k}, n={n}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0);
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_keys_give_identical_streams() {
        let k = StreamKey::with_path(7, &[1, 2, 3]);
        let a: Vec<u64> = (0..16)
            .map({
                let mut r = k.stream();
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..16)
            .map({
                let mut r = k.stream();
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
        let mut other = k.child(0).stream();
        assert_ne!(a[0], other.random::<u64>());
    }

    #[test]
    fn path_prefixes_are_distinct_keys() {
        assert_ne!(
            StreamKey::with_path(1, &[0]).key_bytes(),
            StreamKey::with_path(1, &[0, 0]).key_bytes()
        );
        assert_ne!(
            StreamKey::with_path(1, &[]).key_bytes(),
            StreamKey::with_path(2, &[]).key_bytes()
        );
    }

    #[test]
    fn chi_square_rejects_zero_dof() {
        assert!(CChiSquare::new(0, 0.0).is_err());
        assert!(CChiSquare::new(1, -1.0).is_err());
    }

    #[test]
    fn wishart_rejects_deficient_dof() {
        let g = crate::matkit::chol(&CMatrix::identity(4)).unwrap();
        assert!(sample_cwishart(&mut StreamKey::new(0).stream(), 3, &g).is_err());
    }

    #[test]
    fn cf1_survival_values() {
        assert_eq!(cf1_survival(0.0, 17), 1.0);
        let t = 10f64.powf(3.0 / 17.0) - 1.0;
        assert!((t - 0.50131).abs() < 1e-5);
        assert!((cf1_survival(t, 17) - 1e-3).abs() < 1e-15);
        assert!((cf1_quantile_upper(1e-3, 17) - t).abs() < 1e-14);
        assert!(cf1_survival(0.4, 17) > cf1_survival(0.5, 17));
    }

    #[test]
    fn beta_cdf_endpoints_and_uniform() {
        assert_eq!(beta_cdf(3.0, 5.0, 0.0).unwrap(), 0.0);
        assert_eq!(beta_cdf(3.0, 5.0, 1.0).unwrap(), 1.0);
        for x in [0.1, 0.37, 0.9] {
            assert!((beta_cdf(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
        }
        assert!(beta_cdf(0.0, 1.0, 0.5).is_err());
        assert!(beta_cdf(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson_ci(0, 1_000_000, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        // z²/(n + z²) with z = 1.959964
        assert!((hi - 3.8414e-6).abs() < 1e-9, "{hi}");
        let (lo, hi) = wilson_ci(500, 1000, 0.95).unwrap();
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert!(wilson_ci(3, 2, 0.95).is_err());
        assert!(wilson_ci(0, 0, 0.95).is_err());
    }
}
