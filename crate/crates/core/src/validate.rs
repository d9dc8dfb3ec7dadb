//! Self-check suites: closed forms, oracle equivalence, GER and Ω identities.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detect::{DetectorKind, DirectModel, MisPoint};
use crate::error::Result;
use crate::gof::{ks_one_sample, ks_two_sample};
use crate::matkit::CMatrix;
use crate::mcengine::{
    collect_pairs, estimate_prob, kelly_closed_form_threshold, reference_sampler, Pool,
};
use crate::mismatch::{check_ger, gen_sigma_t, omega_decompose, MismatchSpec};
use crate::randkit::{beta_cdf, cf1_survival, StreamKey};
use crate::scenario::{build_cov, build_steering, ScenarioCfg};
use crate::storep::RepSampler;
use num_complex::Complex64;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        bound: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            bound: bound.into(),
            pass,
        }
    }

    pub fn below(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, format!("< {limit}"), measured < limit)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {}: {} (bound {})",
            self.name, self.measured, self.bound
        )
    }
}

/// KS bound used by every distributional check at full sample sizes.
pub const KS_BOUND: f64 = 0.006;

/// `KS_BOUND`, widened to the 1% critical value when samples are small.
/// `m` is the second sample size of a two-sample test.
pub fn ks_bound(n: u64, m: Option<u64>) -> f64 {
    let eff = match m {
        Some(m) => (n * m) as f64 / (n + m) as f64,
        None => n as f64,
    };
    KS_BOUND.max(1.63 / eff.sqrt())
}

/// Kelly `P_fa` at the closed-form threshold on the no-mismatch fast path.
pub fn closed_form_kelly(
    pool: &Pool,
    key: &StreamKey,
    n: usize,
    k: usize,
    pfa: f64,
    n_trials: u64,
) -> Result<Check> {
    let eta = kelly_closed_form_threshold(n, k, pfa);
    let est = estimate_prob(
        pool,
        key,
        DetectorKind::Kelly,
        eta,
        &reference_sampler(n, k, 0.0)?,
        n_trials,
    )?;
    Ok(Check::new(
        format!("Kelly P_fa at closed-form eta={eta:.6} ({n_trials} trials)"),
        est.p_hat,
        format!("CI [{:.4e}, {:.4e}] contains {pfa:e}", est.ci_lo, est.ci_hi),
        est.contains(pfa),
    ))
}

/// KS of no-mismatch `β` against `Beta(K−N+2, N−1)` and `t̃` against `1 − (1+t)^{−(K−N+1)}`.
pub fn no_mismatch_marginals(
    pool: &Pool,
    key: &StreamKey,
    n: usize,
    k: usize,
    samples: u64,
) -> Result<Vec<Check>> {
    let pts = collect_pairs(pool, &reference_sampler(n, k, 0.0)?, key, samples)?;
    let (a, b) = ((k - n + 2) as f64, (n - 1) as f64);
    let q = (k - n + 1) as u32;
    let betas: Vec<f64> = pts.iter().map(|p| p.beta).collect();
    let ts: Vec<f64> = pts.iter().map(|p| p.t_tilde).collect();
    let d_beta = ks_one_sample(&betas, |x| {
        beta_cdf(a, b, x.clamp(0.0, 1.0)).unwrap_or(f64::NAN)
    });
    let d_t = ks_one_sample(&ts, |t| 1.0 - cf1_survival(t, q));
    let bound = ks_bound(samples, None);
    Ok(vec![
        Check::below(
            format!("KS beta vs Beta({a}, {b}), n={samples}"),
            d_beta,
            bound,
        ),
        Check::below(format!("KS t vs CF(1,{q}), n={samples}"), d_t, bound),
    ])
}

/// Marginal KS distances between two pair samples.
pub fn pair_ks(a: &[MisPoint<f64>], b: &[MisPoint<f64>]) -> (f64, f64) {
    let pick =
        |s: &[MisPoint<f64>], f: fn(&MisPoint<f64>) -> f64| s.iter().map(f).collect::<Vec<f64>>();
    (
        ks_two_sample(&pick(a, |p| p.beta), &pick(b, |p| p.beta)),
        ks_two_sample(&pick(a, |p| p.t_tilde), &pick(b, |p| p.t_tilde)),
    )
}

/// Two-sample KS between representation-path and direct-path draws for one `(Σ, Σ_t, |α|)`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_equivalence(
    pool: &Pool,
    key: &StreamKey,
    label: &str,
    sigma: &CMatrix<f64>,
    sigma_t: &CMatrix<f64>,
    v: &[Complex64],
    alpha_abs: f64,
    k: usize,
    samples: u64,
) -> Result<Vec<Check>> {
    let om = omega_decompose(sigma, sigma_t, v)?;
    let fast = RepSampler::from_summary(&om, k, alpha_abs)?;
    let direct = DirectModel::new(sigma, sigma_t, v, alpha_abs, k)?;
    let a = collect_pairs(pool, &fast, &key.child(0), samples)?;
    let b = collect_pairs(pool, &direct, &key.child(1), samples)?;
    let (db, dt) = pair_ks(&a, &b);
    let bound = ks_bound(samples, Some(samples));
    Ok(vec![
        Check::below(format!("{label}: KS beta fast vs direct"), db, bound),
        Check::below(format!("{label}: KS t fast vs direct"), dt, bound),
    ])
}

/// Draws `draws` training covariances and counts how many satisfy the GER at `tol`.
/// Returns `(holding, max residual)`.
pub fn ger_census(
    key: &StreamKey,
    scenario: &ScenarioCfg,
    spec: &MismatchSpec,
    draws: u64,
    tol: f64,
) -> Result<(u64, f64)> {
    let sigma = build_cov(scenario)?;
    let v = build_steering(scenario.n, scenario.fd)?;
    let mut holding = 0;
    let mut worst: f64 = 0.0;
    for d in 0..draws {
        let (st, _) = gen_sigma_t(&mut key.child(d).stream(), &sigma, &v, spec)?;
        let rep = check_ger(&sigma, &st, &v, tol)?;
        holding += u64::from(rep.holds);
        worst = worst.max(rep.residual);
    }
    Ok((holding, worst))
}

/// Largest relative gap between `Ω₂.₁` and `vᴴΣ_t⁻¹v / vᴴΣ⁻¹v` over random scenarios and families.
pub fn omega_identity(key: &StreamKey, n: usize, k: usize, pairs: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let mut rng = key.child(i).stream();
        let scenario = ScenarioCfg {
            n,
            k,
            cnr_db: rng.random_range(0.0..30.0),
            rho1: rng.random_range(0.5..0.99),
            fd: rng.random_range(-0.5..0.5),
            ..ScenarioCfg::default()
        };
        let delta_db = rng.random_range(1.0..10.0);
        let spec = match i % 4 {
            0 => MismatchSpec::InvWishart { delta_db, nu: None },
            1 => MismatchSpec::EigJitter { delta_db },
            2 => MismatchSpec::GerChol {
                delta_db,
                nu1: None,
                m2: None,
                psi22: None,
            },
            _ => MismatchSpec::GerEig { delta_db },
        };
        let sigma = build_cov(&scenario)?;
        let v = build_steering(n, scenario.fd)?;
        let (st, _) = gen_sigma_t(&mut rng, &sigma, &v, &spec)?;
        let om = omega_decompose(&sigma, &st, &v)?;
        worst = worst.max((om.schur - om.ratio).abs() / om.ratio);
    }
    Ok(worst)
}
