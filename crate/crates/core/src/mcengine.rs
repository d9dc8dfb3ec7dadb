//! Threshold and SNR calibration, probability estimation and mismatch sweeps.
//!
//! Every trial loop is split into fixed-size chunks; chunk `c` of a run keyed
//! by `key` draws from `key.child(c)`. Reductions are integer sums or
//! chunk-ordered concatenations, so results do not depend on the number of
//! worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{stat_value, DetectorKind, DirectModel, MisPoint};
use crate::error::{Error, Result};
use crate::matkit::CMatrix;
use crate::mismatch::{check_ger, gen_sigma_t, omega_decompose, DrawMeta, MismatchSpec};
use crate::randkit::{cf1_quantile_upper, wilson_ci, StreamKey};
use crate::scenario::{build_cov, build_steering, snr_to_alpha, ScenarioCfg};
use crate::storep::{GerSampler, PairSource, RepSampler};

/// Trials per chunk (one stream per chunk).
pub const CHUNK: u64 = 1 << 14;

/// Confidence level of every reported interval.
pub const CI_LEVEL: f64 = 0.95;

/// Worker pool; results are identical for any worker count.
pub struct Pool {
    inner: rayon::ThreadPool,
}

impl Pool {
    /// `workers = 0` selects the available parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let inner = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        Ok(Self { inner })
    }

    pub fn workers(&self) -> usize {
        self.inner.current_num_threads()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.inner.install(f)
    }
}

fn chunks(n_trials: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_chunks = n_trials.div_ceil(CHUNK) as usize;
    (0..n_chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        (c, CHUNK.min(n_trials - c * CHUNK))
    })
}

/// Draws `n` pairs in chunk order.
pub fn collect_pairs(
    pool: &Pool,
    source: &dyn PairSource,
    key: &StreamKey,
    n: u64,
) -> Result<Vec<MisPoint<f64>>> {
    pool.install(|| {
        let parts: Result<Vec<Vec<MisPoint<f64>>>> = chunks(n)
            .map(|(c, len)| {
                let mut rng = key.child(c).stream();
                (0..len).map(|_| source.draw(&mut rng)).collect()
            })
            .collect();
        Ok(parts?.into_iter().flatten().collect())
    })
}

/// Counts, for each `(detector, threshold)`, trials whose statistic exceeds the threshold.
/// All detectors see the same draws.
pub fn count_exceedances(
    pool: &Pool,
    source: &dyn PairSource,
    key: &StreamKey,
    tests: &[(DetectorKind, f64)],
    n_trials: u64,
) -> Result<Vec<u64>> {
    pool.install(|| {
        let per_chunk: Result<Vec<Vec<u64>>> = chunks(n_trials)
            .map(|(c, len)| {
                let mut rng = key.child(c).stream();
                let mut counts = vec![0u64; tests.len()];
                for _ in 0..len {
                    let p = source.draw(&mut rng)?;
                    for (count, &(kind, eta)) in counts.iter_mut().zip(tests) {
                        if stat_value(kind, p) > eta {
                            *count += 1;
                        }
                    }
                }
                Ok(counts)
            })
            .collect();
        Ok(per_chunk?
            .into_iter()
            .fold(vec![0u64; tests.len()], |mut acc, c| {
                acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                acc
            }))
    })
}

/// Exceedance-probability estimate with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfaEstimate {
    pub p_hat: f64,
    pub n_trials: u64,
    pub exceedances: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl PfaEstimate {
    pub fn from_counts(exceedances: u64, n_trials: u64) -> Result<Self> {
        let (ci_lo, ci_hi) = wilson_ci(exceedances, n_trials, CI_LEVEL)?;
        Ok(Self {
            p_hat: exceedances as f64 / n_trials as f64,
            n_trials,
            exceedances,
            ci_lo,
            ci_hi,
        })
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_hi - self.ci_lo) / 2.0
    }

    /// `log₁₀ p̂`, floored at half a count when no trial exceeded.
    pub fn log10(&self) -> f64 {
        self.p_hat.max(0.5 / self.n_trials as f64).log10()
    }
}

/// Which generator feeds an estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimPath {
    /// Stochastic representation.
    #[default]
    Fast,
    /// Matrix-level data and sample covariance.
    Direct,
}

/// `(Σ, Σ_t, v, |α|, K)`: everything needed to build either generator.
#[derive(Clone, Debug)]
pub struct SamplerSource {
    pub sigma: CMatrix<f64>,
    pub sigma_t: CMatrix<f64>,
    pub v: Vec<Complex64>,
    pub alpha_abs: f64,
    pub k: usize,
}

impl SamplerSource {
    pub fn build(&self, path: SimPath) -> Result<Box<dyn PairSource>> {
        Ok(match path {
            SimPath::Fast => Box::new(crate::storep::make_sampler(
                &self.sigma,
                &self.sigma_t,
                &self.v,
                self.alpha_abs,
                self.k,
            )?),
            SimPath::Direct => Box::new(DirectModel::new(
                &self.sigma,
                &self.sigma_t,
                &self.v,
                self.alpha_abs,
                self.k,
            )?),
        })
    }
}

/// No-mismatch generator for `(N, K)` at whitened SNR `snr` (0 under H₀).
pub fn reference_sampler(n: usize, k: usize, snr: f64) -> Result<GerSampler> {
    GerSampler::new(&vec![1.0; n - 1], 1.0, snr, n, k)
}

/// Fraction of trials with `stat_value(kind) > threshold`.
pub fn estimate_prob(
    pool: &Pool,
    key: &StreamKey,
    kind: DetectorKind,
    threshold: f64,
    source: &dyn PairSource,
    n_trials: u64,
) -> Result<PfaEstimate> {
    estimate_probs(pool, key, &[(kind, threshold)], source, n_trials).map(|mut v| v.remove(0))
}

/// Several detectors on common draws.
pub fn estimate_probs(
    pool: &Pool,
    key: &StreamKey,
    tests: &[(DetectorKind, f64)],
    source: &dyn PairSource,
    n_trials: u64,
) -> Result<Vec<PfaEstimate>> {
    if n_trials == 0 {
        return Err(Error::InsufficientTrials {
            required: 1,
            given: 0,
        });
    }
    for &(kind, eta) in tests {
        kind.validate()?;
        if !(eta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {eta} must be >= 0"
            )));
        }
    }
    count_exceedances(pool, source, key, tests, n_trials)?
        .into_iter()
        .map(|e| PfaEstimate::from_counts(e, n_trials))
        .collect()
}

/// Kelly threshold for `P̄fa` from the closed-form survival `(1 + η)^{−(K−N+1)}`.
pub fn kelly_closed_form_threshold(n: usize, k: usize, pfa: f64) -> f64 {
    cf1_quantile_upper(pfa, (k - n + 1) as u32)
}

/// One calibrated threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub detector: DetectorKind,
    pub n: usize,
    pub k: usize,
    pub pfa_target: f64,
    /// Empirical `(1 − P̄fa)`-quantile of the no-mismatch H₀ statistic.
    pub threshold: f64,
    pub n_trials: u64,
    /// Closed-form threshold (Kelly only).
    pub closed_form: Option<f64>,
    /// `P_fa` of [`Self::effective`] on an independent verification run.
    pub achieved: PfaEstimate,
}

impl ThresholdEntry {
    /// Threshold used downstream: the closed form when one exists, else the quantile.
    pub fn effective(&self) -> f64 {
        self.closed_form.unwrap_or(self.threshold)
    }
}

/// Minimum calibration size for `P̄fa`: `⌈100/P̄fa⌉`.
pub fn min_calibration_trials(pfa_target: f64) -> u64 {
    (100.0 / pfa_target).ceil() as u64
}

pub fn calibrate_threshold(
    pool: &Pool,
    key: &StreamKey,
    kind: DetectorKind,
    n: usize,
    k: usize,
    pfa_target: f64,
    n_trials: u64,
) -> Result<ThresholdEntry> {
    kind.validate()?;
    if !(pfa_target > 0.0 && pfa_target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target P_fa {pfa_target} outside (0, 1)"
        )));
    }
    let required = min_calibration_trials(pfa_target);
    if n_trials < required {
        return Err(Error::InsufficientTrials {
            required,
            given: n_trials,
        });
    }
    let source = reference_sampler(n, k, 0.0)?;
    let mut stats: Vec<f64> = collect_pairs(pool, &source, &key.child(0), n_trials)?
        .into_iter()
        .map(|p| stat_value(kind, p))
        .collect();
    stats.sort_unstable_by(f64::total_cmp);
    // Threshold between the m-th and (m+1)-th largest values: exactly m exceed.
    let m = (pfa_target * n_trials as f64).floor() as usize;
    let len = stats.len();
    let threshold = if m == 0 {
        stats[len - 1]
    } else {
        0.5 * (stats[len - m - 1] + stats[len - m])
    };
    let closed_form =
        matches!(kind, DetectorKind::Kelly).then(|| kelly_closed_form_threshold(n, k, pfa_target));
    let eff = closed_form.unwrap_or(threshold);
    let achieved = estimate_prob(pool, &key.child(1), kind, eff, &source, n_trials)?;
    Ok(ThresholdEntry {
        detector: kind,
        n,
        k,
        pfa_target,
        threshold,
        n_trials,
        closed_form,
        achieved,
    })
}

/// Result of an SNR bisection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrCalibration {
    /// Whitened SNR `|α|²vᴴΣ⁻¹v`, linear.
    pub snr: f64,
    pub alpha_abs: f64,
    pub pd: PfaEstimate,
    pub iterations: u32,
}

/// Finds the SNR at which the no-mismatch `P_d` of `kind` at `threshold` hits `pd_target`.
///
/// Every evaluation reuses the same stream, so the estimate is a
/// deterministic step function of the SNR and bisection terminates.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_snr(
    pool: &Pool,
    key: &StreamKey,
    kind: DetectorKind,
    threshold: f64,
    sigma: &CMatrix<f64>,
    v: &[Complex64],
    k: usize,
    pd_target: f64,
    n_trials: u64,
) -> Result<SnrCalibration> {
    if !(pd_target > 0.0 && pd_target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target P_d {pd_target} outside (0, 1)"
        )));
    }
    let n = v.len();
    let eval = |snr: f64| -> Result<PfaEstimate> {
        estimate_prob(
            pool,
            key,
            kind,
            threshold,
            &reference_sampler(n, k, snr)?,
            n_trials,
        )
    };
    let finish = |snr: f64, pd: PfaEstimate, iterations: u32| -> Result<SnrCalibration> {
        Ok(SnrCalibration {
            snr,
            alpha_abs: snr_to_alpha(snr, sigma, v)?,
            pd,
            iterations,
        })
    };
    let accept = |pd: &PfaEstimate| (pd.p_hat - pd_target).abs() <= 2.0 * pd.half_width();

    let at_zero = eval(0.0)?;
    if at_zero.p_hat >= pd_target {
        return Err(Error::Bracket(format!(
            "P_d at zero SNR is already {} >= target {pd_target} (threshold {threshold})",
            at_zero.p_hat
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut hi_pd = eval(hi)?;
    let mut iterations = 1;
    while hi_pd.p_hat < pd_target {
        if iterations > 60 {
            return Err(Error::Bracket(format!(
                "P_d stays at {} below {pd_target} up to SNR {hi}",
                hi_pd.p_hat
            )));
        }
        lo = hi;
        hi *= 2.0;
        hi_pd = eval(hi)?;
        iterations += 1;
    }
    if accept(&hi_pd) && (hi_pd.p_hat - pd_target).abs() < 1e-12 {
        return finish(hi, hi_pd, iterations);
    }
    let mut best = (hi, hi_pd);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let pd = eval(mid)?;
        iterations += 1;
        if (pd.p_hat - pd_target).abs() < (best.1.p_hat - pd_target).abs() {
            best = (mid, pd);
        }
        if pd.p_hat < pd_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if accept(&best.1) && (hi - lo) <= 1e-9 * hi.max(1e-12) {
            break;
        }
        if accept(&best.1) && (best.1.p_hat - pd_target).abs() <= 0.25 * best.1.half_width() {
            break;
        }
    }
    if !accept(&best.1) {
        return Err(Error::Bracket(format!(
            "bisection ended at SNR {} with P_d {} not within tolerance of {pd_target}",
            best.0, best.1.p_hat
        )));
    }
    finish(best.0, best.1, iterations)
}

/// Detector evaluated in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepDetector {
    Fixed {
        detector: DetectorKind,
    },
    /// Kalson with `κ = c·Ω₂.₁` of the current draw.
    Clairvoyant {
        c: f64,
    },
}

impl SweepDetector {
    pub fn label(&self) -> String {
        match self {
            Self::Fixed { detector } => detector.label(),
            Self::Clairvoyant { c } => format!("clairvoyant({c})"),
        }
    }

    /// Detector whose no-mismatch threshold this row uses under `policy`.
    pub fn calibration_kind(&self, policy: ThresholdPolicy) -> DetectorKind {
        match (*self, policy) {
            (Self::Fixed { detector }, ThresholdPolicy::PerDetector) => detector,
            _ => DetectorKind::Kelly,
        }
    }

    fn resolve(&self, schur: f64) -> DetectorKind {
        match *self {
            Self::Fixed { detector } => detector,
            Self::Clairvoyant { c } => DetectorKind::Kalson { kappa: c * schur },
        }
    }
}

/// Which no-mismatch threshold each sweep row is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Every row uses Kelly's `η̄` for the target `P̄fa`.
    #[default]
    Nominal,
    /// Fixed detectors use their own `η(κ)`; clairvoyant rows keep Kelly's `η̄`.
    PerDetector,
}

/// Sweep settings beyond the scenario and mismatch family.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub detectors: Vec<SweepDetector>,
    pub threshold: ThresholdPolicy,
    pub n_draws: u64,
    pub n_trials_pfa: u64,
    /// `(P̄d target, trials)` when detection probabilities are wanted.
    pub pd: Option<PdPlan>,
    pub path: SimPath,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdPlan {
    pub pd_target: f64,
    pub n_trials: u64,
    pub n_trials_calibration: u64,
}

/// Per-detector thresholds for a sweep (and SNRs when `P_d` is requested).
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub thresholds: Vec<ThresholdEntry>,
    pub snrs: Vec<Option<SnrCalibration>>,
}

impl Calibration {
    fn threshold_for(&self, kind: DetectorKind) -> Result<&ThresholdEntry> {
        self.thresholds
            .iter()
            .find(|t| t.detector == kind)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("no threshold calibrated for {}", kind.label()))
            })
    }
}

/// Calibrates thresholds for every distinct detector of the plan and, when
/// requested, the no-mismatch SNR reaching the `P_d` target for each row.
pub fn calibrate_plan(
    pool: &Pool,
    key: &StreamKey,
    scenario: &ScenarioCfg,
    plan: &SweepPlan,
    pfa_target: f64,
    n_trials: u64,
) -> Result<Calibration> {
    let mut kinds: Vec<DetectorKind> = Vec::new();
    for d in &plan.detectors {
        let kind = d.calibration_kind(plan.threshold);
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    let thresholds = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            calibrate_threshold(
                pool,
                &key.child(i as u64),
                kind,
                scenario.n,
                scenario.k,
                pfa_target,
                n_trials,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cal = Calibration {
        thresholds,
        snrs: Vec::new(),
    };
    let snrs = match plan.pd {
        None => vec![None; plan.detectors.len()],
        Some(pd) => {
            let sigma = build_cov(scenario)?;
            let v = build_steering(scenario.n, scenario.fd)?;
            plan.detectors
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    // Under no mismatch Ω₂.₁ = 1, so a clairvoyant row behaves as Kalson(c).
                    let kind = d.resolve(1.0);
                    let eta = cal
                        .threshold_for(d.calibration_kind(plan.threshold))?
                        .effective();
                    calibrate_snr(
                        pool,
                        &key.child(1000 + i as u64),
                        kind,
                        eta,
                        &sigma,
                        &v,
                        scenario.k,
                        pd.pd_target,
                        pd.n_trials_calibration,
                    )
                    .map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(Calibration { snrs, ..cal })
}

/// One `(draw, detector)` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub draw_id: u64,
    pub variant: String,
    pub meta: DrawMeta,
    /// `Ω₂.₁` of the draw.
    pub schur: Option<f64>,
    pub ger_residual: Option<f64>,
    pub detector: String,
    pub kappa: Option<f64>,
    pub clairvoyant_c: Option<f64>,
    pub threshold: f64,
    pub pfa: Option<PfaEstimate>,
    pub pd_snr: Option<f64>,
    pub pd: Option<PfaEstimate>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Per-detector summary across draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub detector: String,
    pub draws: usize,
    pub mean_pfa: f64,
    pub std_pfa: f64,
    pub mean_log10_pfa: f64,
    pub std_log10_pfa: f64,
    /// All draws pooled.
    pub pooled: PfaEstimate,
    pub mean_pd: Option<f64>,
    pub std_pd: Option<f64>,
    pub failures: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl SweepResult {
    pub fn detectors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.detector) {
                out.push(r.detector.clone());
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, detector: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.detector == detector)
    }

    pub fn summary(&self) -> Result<Vec<DetectorSummary>> {
        self.detectors()
            .into_iter()
            .map(|det| {
                let rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.detector == det).collect();
                let ok: Vec<&PfaEstimate> = rows.iter().filter_map(|r| r.pfa.as_ref()).collect();
                let pfas: Vec<f64> = ok.iter().map(|e| e.p_hat).collect();
                let logs: Vec<f64> = ok.iter().map(|e| e.log10()).collect();
                let (mean_pfa, std_pfa) = mean_std(&pfas);
                let (mean_log10_pfa, std_log10_pfa) = mean_std(&logs);
                let exc: u64 = ok.iter().map(|e| e.exceedances).sum();
                let trials: u64 = ok.iter().map(|e| e.n_trials).sum();
                let pooled = PfaEstimate::from_counts(exc, trials.max(1))?;
                let pds: Vec<f64> = rows.iter().filter_map(|r| r.pd.map(|p| p.p_hat)).collect();
                let (mean_pd, std_pd) = if pds.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_std(&pds);
                    (Some(m), Some(s))
                };
                Ok(DetectorSummary {
                    detector: det,
                    draws: ok.len(),
                    mean_pfa,
                    std_pfa,
                    mean_log10_pfa,
                    std_log10_pfa,
                    pooled,
                    mean_pd,
                    std_pd,
                    failures: rows.len() - ok.len(),
                })
            })
            .collect()
    }
}

/// Draws `n_draws` training covariances and estimates `P_fa` (and `P_d`) per detector.
///
/// Stream layout under `key`: draw `d` generates `Σ_t` from `[d, 0]`, runs
/// H₀ trials on `[d, 1]` and H₁ trials for detector `i` on `[d, 2, i]`.
/// A failing draw yields rows carrying the error; the sweep continues.
pub fn sweep(
    pool: &Pool,
    key: &StreamKey,
    scenario: &ScenarioCfg,
    spec: &MismatchSpec,
    plan: &SweepPlan,
    cal: &Calibration,
) -> Result<SweepResult> {
    let sigma = build_cov(scenario)?;
    let v = build_steering(scenario.n, scenario.fd)?;
    spec.validate(scenario.n)?;
    for d in &plan.detectors {
        if let SweepDetector::Fixed { detector } = d {
            detector.validate()?;
        }
        cal.threshold_for(d.calibration_kind(plan.threshold))?;
    }
    if plan.pd.is_some() && cal.snrs.len() != plan.detectors.len() {
        return Err(Error::InvalidArgument(
            "P_d requested but SNRs not calibrated for every detector".into(),
        ));
    }

    let mut rows = Vec::with_capacity((plan.n_draws as usize) * plan.detectors.len());
    for draw in 0..plan.n_draws {
        let dkey = key.child(draw);
        let outcome = run_draw(pool, &dkey, scenario, spec, plan, cal, &sigma, &v);
        match outcome {
            Ok(mut draw_rows) => {
                draw_rows.iter_mut().for_each(|r| r.draw_id = draw);
                rows.extend(draw_rows);
            }
            Err((meta, err)) => {
                for d in &plan.detectors {
                    rows.push(SweepRow {
                        draw_id: draw,
                        variant: spec.name().into(),
                        meta: meta.clone(),
                        schur: None,
                        ger_residual: None,
                        detector: d.label(),
                        kappa: None,
                        clairvoyant_c: match d {
                            SweepDetector::Clairvoyant { c } => Some(*c),
                            _ => None,
                        },
                        threshold: cal
                            .threshold_for(d.calibration_kind(plan.threshold))?
                            .effective(),
                        pfa: None,
                        pd_snr: None,
                        pd: None,
                        error: Some(err.to_string()),
                    });
                }
            }
        }
    }
    Ok(SweepResult { rows })
}

#[allow(clippy::too_many_arguments, clippy::result_large_err)]
fn run_draw(
    pool: &Pool,
    dkey: &StreamKey,
    scenario: &ScenarioCfg,
    spec: &MismatchSpec,
    plan: &SweepPlan,
    cal: &Calibration,
    sigma: &CMatrix<f64>,
    v: &[Complex64],
) -> std::result::Result<Vec<SweepRow>, (DrawMeta, Error)> {
    let (sigma_t, meta) = gen_sigma_t(&mut dkey.child(0).stream(), sigma, v, spec)
        .map_err(|e| (DrawMeta::default(), e))?;
    let fail = |e: Error| (meta.clone(), e);
    let om = omega_decompose(sigma, &sigma_t, v).map_err(fail)?;
    let ger = check_ger(sigma, &sigma_t, v, 1e-8).map_err(fail)?;

    let tests: Vec<(DetectorKind, f64)> = plan
        .detectors
        .iter()
        .map(|d| {
            Ok((
                d.resolve(om.schur),
                cal.threshold_for(d.calibration_kind(plan.threshold))?
                    .effective(),
            ))
        })
        .collect::<Result<_>>()
        .map_err(fail)?;

    let h0 = SamplerSource {
        sigma: sigma.clone(),
        sigma_t: sigma_t.clone(),
        v: v.to_vec(),
        alpha_abs: 0.0,
        k: scenario.k,
    };
    let h0_source = build_source(&h0, plan.path, &om).map_err(fail)?;
    let pfas = estimate_probs(
        pool,
        &dkey.child(1),
        &tests,
        h0_source.as_ref(),
        plan.n_trials_pfa,
    )
    .map_err(fail)?;

    let mut rows = Vec::with_capacity(tests.len());
    for (i, (d, (&(kind, eta), pfa))) in plan
        .detectors
        .iter()
        .zip(tests.iter().zip(pfas))
        .enumerate()
    {
        let (pd_snr, pd) = match (plan.pd, cal.snrs.get(i).and_then(Option::as_ref)) {
            (Some(pd_plan), Some(snr)) => {
                let h1 = SamplerSource {
                    alpha_abs: snr.alpha_abs,
                    ..h0.clone()
                };
                let source = build_source(&h1, plan.path, &om).map_err(fail)?;
                let est = estimate_prob(
                    pool,
                    &dkey.child(2).child(i as u64),
                    kind,
                    eta,
                    source.as_ref(),
                    pd_plan.n_trials,
                )
                .map_err(fail)?;
                (Some(snr.snr), Some(est))
            }
            _ => (None, None),
        };
        rows.push(SweepRow {
            draw_id: 0,
            variant: spec.name().into(),
            meta: meta.clone(),
            schur: Some(om.schur),
            ger_residual: Some(ger.residual),
            detector: d.label(),
            kappa: kind.kappa(),
            clairvoyant_c: match d {
                SweepDetector::Clairvoyant { c } => Some(*c),
                _ => None,
            },
            threshold: eta,
            pfa: Some(pfa),
            pd_snr,
            pd,
            error: None,
        });
    }
    Ok(rows)
}

fn build_source(
    src: &SamplerSource,
    path: SimPath,
    om: &crate::mismatch::OmegaSummary<f64>,
) -> Result<Box<dyn PairSource>> {
    match path {
        SimPath::Fast => Ok(Box::new(RepSampler::from_summary(
            om,
            src.k,
            src.alpha_abs,
        )?)),
        SimPath::Direct => src.build(SimPath::Direct),
    }
}

/// Right-continuous empirical CDF: distinct sorted values with `P(X ≤ value)`.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "empirical CDF of an empty sample".into(),
        ));
    }
    if values.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument(
            "empirical CDF input contains NaN".into(),
        ));
    }
    let mut xs = values.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    Ok(out)
}
