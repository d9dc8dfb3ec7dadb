//! One function per subcommand. Each writes its files under `out` and
//! returns the paths written.

use std::path::{Path, PathBuf};

use covmis::detect::DetectorKind;
use covmis::mcengine::{
    calibrate_plan, calibrate_threshold, collect_pairs, ecdf, reference_sampler, sweep,
    Calibration, DetectorSummary, PdPlan, Pool, SamplerSource, SnrCalibration, SweepDetector,
    SweepPlan, SweepResult, ThresholdEntry, ThresholdPolicy,
};
use covmis::mismatch::gen_sigma_t;
use covmis::randkit::StreamKey;
use covmis::report::{
    palette, summary_csv, sweep_csv, table_csv, thin, Axis, Plot, Provenance, Series,
};
use covmis::scenario::{build_cov, build_steering};
use covmis::validate::{
    closed_form_kelly, ger_census, no_mismatch_marginals, omega_identity, oracle_equivalence, Check,
};
use covmis::Point;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::Failure;

/// Stream roots per subcommand, so that commands never share random numbers.
const KEY_VALIDATE: u64 = 0;
const KEY_CALIBRATE: u64 = 1;
const KEY_CDF: u64 = 2;
const KEY_SWEEP: u64 = 3;
const KEY_ROC: u64 = 4;

const ECDF_POINTS: usize = 400;
const GER_TOL: f64 = 1e-8;
const OMEGA_TOL: f64 = 1e-8;
const ORACLE_DRAWS: u64 = 3;
const OMEGA_PAIRS: u64 = 20;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub pool: &'a Pool,
    pub prov: Provenance,
    pub out: &'a Path,
}

impl Ctx<'_> {
    fn key(&self, cmd: u64) -> StreamKey {
        StreamKey::new(self.cfg.seed).child(cmd)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialise");
        text.push('\n');
        self.write(name, &text)
    }
}

fn num(e: covmis::Error) -> Failure {
    Failure::Numerical(e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct ValidateReport {
    provenance: Provenance,
    checks: Vec<Check>,
}

pub fn validate(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ctx.cfg;
    let sc = &cfg.scenario;
    let key = ctx.key(KEY_VALIDATE);
    let pool = ctx.pool;
    let mut checks = vec![closed_form_kelly(
        pool,
        &key.child(0),
        sc.n,
        sc.k,
        cfg.pfa_target,
        cfg.trials.calibration,
    )
    .map_err(num)?];
    checks.extend(
        no_mismatch_marginals(pool, &key.child(1), sc.n, sc.k, cfg.trials.validate).map_err(num)?,
    );

    let sigma = build_cov(sc).map_err(num)?;
    let v = build_steering(sc.n, sc.fd).map_err(num)?;
    for d in 0..ORACLE_DRAWS {
        let (sigma_t, _) = gen_sigma_t(
            &mut key.child(2).child(d).stream(),
            &sigma,
            &v,
            &cfg.mismatch,
        )
        .map_err(num)?;
        checks.extend(
            oracle_equivalence(
                pool,
                &key.child(3).child(d),
                &format!("{} draw {d}", cfg.mismatch.name()),
                &sigma,
                &sigma_t,
                &v,
                0.0,
                sc.k,
                cfg.trials.validate,
            )
            .map_err(num)?,
        );
    }

    if cfg.mismatch.enforces_ger() {
        let (holding, worst) =
            ger_census(&key.child(4), sc, &cfg.mismatch, cfg.n_draws, GER_TOL).map_err(num)?;
        checks.push(Check::new(
            format!("GER holds on every {} draw", cfg.mismatch.name()),
            holding as f64,
            format!(
                "= {} (max residual {worst:.2e}, tol {GER_TOL:e})",
                cfg.n_draws
            ),
            holding == cfg.n_draws,
        ));
    }
    let worst = omega_identity(&key.child(5), sc.n, sc.k, OMEGA_PAIRS).map_err(num)?;
    checks.push(Check::below(
        format!("Omega_2.1 vs quadratic-form ratio, {OMEGA_PAIRS} pairs"),
        worst,
        OMEGA_TOL,
    ));

    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let path = ctx.write_json(
        "validate.json",
        &ValidateReport {
            provenance: ctx.prov.clone(),
            checks,
        },
    )?;
    if failed > 0 {
        return Err(Failure::Validation(format!(
            "{failed} check(s) failed, see {}",
            path.display()
        )));
    }
    Ok(vec![path])
}

/// Calibrated thresholds written by `calibrate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub provenance: Provenance,
    pub entries: Vec<ThresholdEntry>,
}

pub fn calibrate(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ctx.cfg;
    let key = ctx.key(KEY_CALIBRATE);
    let mut kinds: Vec<DetectorKind> = Vec::new();
    for &d in &cfg.detectors {
        if !kinds.contains(&d) {
            kinds.push(d);
        }
    }
    let entries = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            calibrate_threshold(
                ctx.pool,
                &key.child(i as u64),
                kind,
                cfg.scenario.n,
                cfg.scenario.k,
                cfg.pfa_target,
                cfg.trials.calibration,
            )
        })
        .collect::<covmis::Result<Vec<_>>>()
        .map_err(num)?;
    for e in &entries {
        let cf = e
            .closed_form
            .map(|c| format!(" closed form {c:.6}"))
            .unwrap_or_default();
        println!(
            "{:<14} eta {:.6}{cf}  achieved P_fa {:.3e} [{:.3e}, {:.3e}]",
            e.detector.label(),
            e.threshold,
            e.achieved.p_hat,
            e.achieved.ci_lo,
            e.achieved.ci_hi
        );
    }
    let table = ThresholdTable {
        provenance: ctx.prov.clone(),
        entries,
    };
    Ok(vec![ctx.write_json("thresholds.json", &table)?])
}

const CDF_COLUMNS: &[&str] = &["curve", "draw_id", "beta", "t_tilde"];

pub fn cdf(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ctx.cfg;
    let sc = &cfg.scenario;
    let key = ctx.key(KEY_CDF);
    let sigma = build_cov(sc).map_err(num)?;
    let v = build_steering(sc.n, sc.fd).map_err(num)?;
    let samples = cfg.trials.cdf_samples;

    let mut curves: Vec<(String, Option<u64>, Vec<Point>)> = Vec::new();
    for d in 0..cfg.cdf_draws {
        let dkey = key.child(d);
        let (sigma_t, _) =
            gen_sigma_t(&mut dkey.child(0).stream(), &sigma, &v, &cfg.mismatch).map_err(num)?;
        let source = SamplerSource {
            sigma: sigma.clone(),
            sigma_t,
            v: v.clone(),
            alpha_abs: 0.0,
            k: sc.k,
        }
        .build(cfg.path)
        .map_err(num)?;
        let pts = collect_pairs(ctx.pool, source.as_ref(), &dkey.child(1), samples).map_err(num)?;
        curves.push((cfg.mismatch.name().into(), Some(d), pts));
    }
    let reference = reference_sampler(sc.n, sc.k, 0.0).map_err(num)?;
    let pts =
        collect_pairs(ctx.pool, &reference, &key.child(cfg.cdf_draws), samples).map_err(num)?;
    curves.push(("reference".into(), None, pts));

    let rows = curves.iter().flat_map(|(curve, draw, pts)| {
        pts.iter().map(move |p| {
            vec![
                curve.clone(),
                draw.map(|d| d.to_string()).unwrap_or_default(),
                p.beta.to_string(),
                p.t_tilde.to_string(),
            ]
        })
    });
    let mut written = vec![ctx.write("cdf.csv", &table_csv(CDF_COLUMNS, rows, &ctx.prov))?];

    let plot = |title: &str, x_label: &str, x_axis: Axis, pick: fn(&Point) -> f64| {
        let series = curves
            .iter()
            .map(|(curve, draw, pts)| {
                let xs: Vec<f64> = pts.iter().map(pick).collect();
                let reference = draw.is_none();
                Ok(Series {
                    label: match draw {
                        Some(d) => format!("draw {d}"),
                        None => curve.clone(),
                    },
                    points: thin(&ecdf(&xs)?, ECDF_POINTS),
                    color: if reference {
                        "black".into()
                    } else {
                        palette(draw.unwrap_or(0) as usize).into()
                    },
                    dashed: reference,
                    markers: false,
                })
            })
            .collect::<covmis::Result<Vec<_>>>()?;
        Ok::<_, covmis::Error>(Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: "empirical CDF".into(),
            x_axis,
            y_axis: Axis::Linear,
            series,
        })
    };
    let name = cfg.mismatch.name();
    let beta = plot(&format!("beta, {name}"), "beta", Axis::Linear, |p| p.beta).map_err(num)?;
    let t = plot(&format!("t, {name}"), "t", Axis::Log10, |p| p.t_tilde).map_err(num)?;
    written.push(ctx.write("cdf_beta.svg", &beta.to_svg())?);
    written.push(ctx.write("cdf_t.svg", &t.to_svg())?);
    Ok(written)
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepSummary {
    provenance: Provenance,
    threshold_policy: ThresholdPolicy,
    thresholds: Vec<ThresholdEntry>,
    snrs: Vec<Option<SnrCalibration>>,
    detectors: Vec<DetectorSummary>,
}

fn plan(cfg: &RunConfig, policy: ThresholdPolicy, with_pd: bool) -> SweepPlan {
    let detectors = cfg
        .detectors
        .iter()
        .map(|&detector| SweepDetector::Fixed { detector })
        .chain(
            cfg.clairvoyant_c
                .iter()
                .map(|&c| SweepDetector::Clairvoyant { c }),
        )
        .collect();
    SweepPlan {
        detectors,
        threshold: policy,
        n_draws: cfg.n_draws,
        n_trials_pfa: cfg.trials.pfa,
        pd: with_pd.then_some(PdPlan {
            pd_target: cfg.pd_target,
            n_trials: cfg.trials.pd,
            n_trials_calibration: cfg.trials.pd_calibration,
        }),
        path: cfg.path,
    }
}

fn run_plan(
    ctx: &Ctx,
    key: &StreamKey,
    plan: &SweepPlan,
) -> Result<(Calibration, SweepResult), Failure> {
    let cfg = ctx.cfg;
    let cal = calibrate_plan(
        ctx.pool,
        &key.child(0),
        &cfg.scenario,
        plan,
        cfg.pfa_target,
        cfg.trials.calibration,
    )
    .map_err(num)?;
    let res = sweep(
        ctx.pool,
        &key.child(1),
        &cfg.scenario,
        &cfg.mismatch,
        plan,
        &cal,
    )
    .map_err(num)?;
    Ok((cal, res))
}

fn write_summary(
    ctx: &Ctx,
    plan: &SweepPlan,
    cal: Calibration,
    summary: Vec<DetectorSummary>,
) -> Result<PathBuf, Failure> {
    ctx.write_json(
        "summary.json",
        &SweepSummary {
            provenance: ctx.prov.clone(),
            threshold_policy: plan.threshold,
            thresholds: cal.thresholds,
            snrs: cal.snrs,
            detectors: summary,
        },
    )
}

fn check_rows(res: &SweepResult) -> Result<(), Failure> {
    let failed: Vec<&str> = res.rows.iter().filter_map(|r| r.error.as_deref()).collect();
    match failed.first() {
        None => Ok(()),
        Some(first) => Err(Failure::Numerical(format!(
            "{} row(s) failed, first: {first}",
            failed.len()
        ))),
    }
}

pub fn sweep_cmd(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ctx.cfg;
    let policy = cfg.threshold_policy.unwrap_or(ThresholdPolicy::Nominal);
    let plan = plan(cfg, policy, cfg.with_pd);
    let (cal, res) = run_plan(ctx, &ctx.key(KEY_SWEEP), &plan)?;
    let summary = res.summary().map_err(num)?;
    for s in &summary {
        println!(
            "{:<18} mean P_fa {:.3e}  mean log10 P_fa {:+.3} (std {:.3})  failures {}",
            s.detector, s.mean_pfa, s.mean_log10_pfa, s.std_log10_pfa, s.failures
        );
    }

    let mut written = vec![
        ctx.write("sweep.csv", &sweep_csv(&res, &ctx.prov))?,
        ctx.write("summary.csv", &summary_csv(&summary, &ctx.prov))?,
    ];
    let series = res
        .detectors()
        .iter()
        .enumerate()
        .filter_map(|(i, det)| {
            let pfas: Vec<f64> = res
                .rows_for(det)
                .filter_map(|r| r.pfa.map(|p| p.p_hat))
                .collect();
            let points = ecdf(&pfas).ok()?;
            Some(Series {
                label: det.clone(),
                points,
                color: palette(i).into(),
                dashed: false,
                markers: false,
            })
        })
        .collect();
    let plot = Plot {
        title: format!("P_fa over {} draws, {}", cfg.n_draws, cfg.mismatch.name()),
        x_label: "P_fa".into(),
        y_label: "empirical CDF".into(),
        x_axis: Axis::Log10,
        y_axis: Axis::Linear,
        series,
    };
    written.push(ctx.write("sweep_pfa.svg", &plot.to_svg())?);
    written.push(write_summary(ctx, &plan, cal, summary)?);
    check_rows(&res)?;
    Ok(written)
}

const ROC_COLUMNS: &[&str] = &[
    "draw_id",
    "detector",
    "pfa_hat",
    "pfa_ci_lo",
    "pfa_ci_hi",
    "pd_hat",
    "pd_ci_lo",
    "pd_ci_hi",
    "pd_snr_db",
];

pub fn roc(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let cfg = ctx.cfg;
    let policy = cfg.threshold_policy.unwrap_or(ThresholdPolicy::PerDetector);
    let plan = plan(cfg, policy, true);
    let (cal, res) = run_plan(ctx, &ctx.key(KEY_ROC), &plan)?;
    let summary = res.summary().map_err(num)?;

    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let rows = res.rows.iter().map(|r| {
        vec![
            r.draw_id.to_string(),
            r.detector.clone(),
            opt(r.pfa.map(|p| p.p_hat)),
            opt(r.pfa.map(|p| p.ci_lo)),
            opt(r.pfa.map(|p| p.ci_hi)),
            opt(r.pd.map(|p| p.p_hat)),
            opt(r.pd.map(|p| p.ci_lo)),
            opt(r.pd.map(|p| p.ci_hi)),
            opt(r.pd_snr.map(|s| 10.0 * s.log10())),
        ]
    });
    let mut written = vec![ctx.write("roc.csv", &table_csv(ROC_COLUMNS, rows, &ctx.prov))?];

    let series = res
        .detectors()
        .iter()
        .enumerate()
        .map(|(i, det)| Series {
            label: det.clone(),
            points: res
                .rows_for(det)
                .filter_map(|r| Some((r.pfa?.p_hat, r.pd?.p_hat)))
                .collect(),
            color: palette(i).into(),
            dashed: false,
            markers: true,
        })
        .collect();
    let plot = Plot {
        title: format!(
            "operating points, target ({:e}, {}), {}",
            cfg.pfa_target,
            cfg.pd_target,
            cfg.mismatch.name()
        ),
        x_label: "P_fa".into(),
        y_label: "P_d".into(),
        x_axis: Axis::Log10,
        y_axis: Axis::Linear,
        series,
    };
    written.push(ctx.write("roc.svg", &plot.to_svg())?);
    for s in &summary {
        println!(
            "{:<18} std log10 P_fa {:.3}  mean P_d {:.3} (std {:.3})",
            s.detector,
            s.std_log10_pfa,
            s.mean_pd.unwrap_or(f64::NAN),
            s.std_pd.unwrap_or(f64::NAN)
        );
    }
    written.push(write_summary(ctx, &plan, cal, summary)?);
    check_rows(&res)?;
    Ok(written)
}
