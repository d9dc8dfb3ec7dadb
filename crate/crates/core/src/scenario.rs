//! Clutter-plus-noise scenario: covariance, Doppler steering vector and the
//! SNR ↔ amplitude mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkit::{chol, CMatrix};
use crate::scalar::{Cx, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioCfg {
    /// Number of channels.
    pub n: usize,
    /// Number of training snapshots.
    pub k: usize,
    #[serde(default = "default_cnr_db")]
    pub cnr_db: f64,
    /// One-lag clutter correlation.
    #[serde(default = "default_rho1")]
    pub rho1: f64,
    /// Normalised Doppler frequency of the target.
    #[serde(default = "default_fd")]
    pub fd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

fn default_cnr_db() -> f64 {
    20.0
}

fn default_rho1() -> f64 {
    0.95
}

fn default_fd() -> f64 {
    0.08
}

impl Default for ScenarioCfg {
    fn default() -> Self {
        Self {
            n: 16,
            k: 32,
            cnr_db: default_cnr_db(),
            rho1: default_rho1(),
            fd: default_fd(),
            snr_db: None,
        }
    }
}

impl ScenarioCfg {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "N = {} must be at least 2",
                self.n
            )));
        }
        if self.k < self.n {
            return Err(Error::InvalidArgument(format!(
                "K = {} must be at least N = {}",
                self.k, self.n
            )));
        }
        if !(self.rho1 > 0.0 && self.rho1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho1 = {} outside (0, 1)",
                self.rho1
            )));
        }
        if !self.cnr_db.is_finite() || !self.fd.is_finite() {
            return Err(Error::InvalidArgument(
                "cnr_db and fd must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Clutter spectral width σ_f with `exp(−2π²σ_f²) = rho1`.
    pub fn spectral_width(&self) -> f64 {
        clutter_spectral_width(self.rho1)
    }
}

pub fn clutter_spectral_width(rho1: f64) -> f64 {
    (-rho1.ln() / (2.0 * std::f64::consts::PI * std::f64::consts::PI)).sqrt()
}

/// Gaussian-shaped clutter correlation `Σ_c(m, n) = exp(−2π²σ_f²(m − n)²)`.
pub fn clutter_correlation<T: Real>(n: usize, rho1: T) -> CMatrix<T> {
    // exp(−2π²σ_f²·d²) = rho1^{d²}
    CMatrix::from_fn(n, n, |i, j| {
        let d = T::from_usize(i.abs_diff(j)).expect("small lag");
        Cx::new(rho1.powf(d * d), T::zero())
    })
}

/// `Σ = P_c·Σ_c + I` with `P_c = 10^{cnr_db/10}`.
pub fn build_cov<T: Real>(cfg: &ScenarioCfg) -> Result<CMatrix<T>> {
    cfg.validate()?;
    let pc = T::lit(10f64.powf(cfg.cnr_db / 10.0));
    let sigma_c = clutter_correlation(cfg.n, T::lit(cfg.rho1));
    Ok(sigma_c.scale(pc).add(&CMatrix::identity(cfg.n)))
}

/// Unit-norm Doppler steering vector `N^{-1/2}[1, e^{i2πf_d}, …, e^{i2π(N−1)f_d}]`.
pub fn build_steering<T: Real>(n: usize, fd: T) -> Result<Vec<Cx<T>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "steering vector needs N >= 2, got {n}"
        )));
    }
    let amp = T::one() / T::from_usize(n).expect("small n").sqrt();
    let two_pi = T::PI() + T::PI();
    Ok((0..n)
        .map(|m| Cx::from_polar(amp, two_pi * fd * T::from_usize(m).expect("small index")))
        .collect())
}

/// `vᴴΣ⁻¹v`, computed through a Cholesky solve.
pub fn whitened_energy<T: Real>(sigma: &CMatrix<T>, v: &[Cx<T>]) -> Result<T> {
    let l = chol(sigma)?;
    let y = l.solve_lower(v);
    Ok(y.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()))
}

/// `|α| = sqrt(snr / vᴴΣ⁻¹v)`; SNR is the whitened `|α|²·vᴴΣ⁻¹v`.
pub fn snr_to_alpha<T: Real>(snr_linear: T, sigma: &CMatrix<T>, v: &[Cx<T>]) -> Result<T> {
    if !(snr_linear >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "SNR {snr_linear} must be >= 0"
        )));
    }
    Ok((snr_linear / whitened_energy(sigma, v)?).sqrt())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::dot;

    #[test]
    fn clutter_unit_diagonal_and_one_lag() {
        let s = clutter_correlation::<f64>(16, 0.95);
        for m in 0..16 {
            assert_eq!(s[(m, m)].re, 1.0);
        }
        assert!((s[(3, 4)].re - 0.95).abs() < 1e-15);
        assert!((s[(4, 3)].re - 0.95).abs() < 1e-15);
    }

    #[test]
    fn spectral_width_inverts_rho1() {
        let sf = clutter_spectral_width(0.95);
        assert!((sf - 0.050975961).abs() < 1e-8, "{sf}");
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(((-2.0 * pi2 * sf * sf).exp() - 0.95).abs() < 1e-12);
        // The closed form agrees with the rho1^{d²} shortcut at lag 3.
        let s = clutter_correlation::<f64>(4, 0.95);
        assert!(((-2.0 * pi2 * sf * sf * 9.0).exp() - s[(0, 3)].re).abs() < 1e-12);
    }

    #[test]
    fn covariance_diagonal_at_20db() {
        let s = build_cov::<f64>(&ScenarioCfg::default()).unwrap();
        assert!((s[(0, 0)].re - 101.0).abs() < 1e-12);
        assert!(s.hermitian_residual() == 0.0);
    }

    #[test]
    fn covariance_is_pd_over_cnr_range() {
        for n in [2, 16, 64] {
            for cnr in [0.0, 20.0, 40.0] {
                let cfg = ScenarioCfg {
                    n,
                    k: 2 * n,
                    cnr_db: cnr,
                    ..Default::default()
                };
                let s = build_cov::<f64>(&cfg).unwrap();
                let e = crate::matkit::heig(&s).unwrap();
                // Clutter part is PSD so the white floor bounds the spectrum below.
                assert!(
                    *e.values.last().unwrap() >= 1.0 - 1e-6 * e.values[0],
                    "n={n} cnr={cnr}"
                );
                assert!(chol(&s).is_ok(), "n={n} cnr={cnr}");
            }
        }
    }

    #[test]
    fn invalid_cfg_rejected() {
        assert!(build_cov::<f64>(&ScenarioCfg {
            k: 8,
            ..Default::default()
        })
        .is_err());
        assert!(build_cov::<f64>(&ScenarioCfg {
            rho1: 1.0,
            ..Default::default()
        })
        .is_err());
        assert!(build_cov::<f64>(&ScenarioCfg {
            n: 1,
            k: 4,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn steering_vector_properties() {
        let v = build_steering::<f64>(16, 0.08).unwrap();
        assert!((dot(&v, &v).re - 1.0).abs() < 1e-12);
        let ratio = v[1] / v[0];
        let expect = Cx::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.08);
        assert!((ratio - expect).norm() < 1e-12);
        let v0 = build_steering::<f64>(4, 0.0).unwrap();
        assert!(v0.iter().all(|z| (z.re - 0.5).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn snr_alpha_mapping() {
        let cfg = ScenarioCfg::default();
        let s = build_cov::<f64>(&cfg).unwrap();
        let v = build_steering(16, 0.08).unwrap();
        assert_eq!(snr_to_alpha(0.0, &s, &v).unwrap(), 0.0);
        let e4 = build_steering::<f64>(4, 0.1).unwrap();
        let a = snr_to_alpha(4.0, &CMatrix::identity(4), &e4).unwrap();
        assert!((a - 2.0).abs() < 1e-14);
        let snr = 13.7;
        let a = snr_to_alpha(snr, &s, &v).unwrap();
        let back = a * a * whitened_energy(&s, &v).unwrap();
        assert!((back - snr).abs() / snr < 1e-12);
    }
}
