//! CSV and SVG writers for experiment outputs.
//!
//! Every CSV starts with `#`-prefixed metadata lines; floats use the shortest
//! round-trip representation so identical runs give identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mcengine::{DetectorSummary, SweepResult};
use crate::randkit::RNG_ALGORITHM;

/// Metadata stamped on every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub rng: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
            rng: RNG_ALGORITHM.into(),
        }
    }

    pub fn header(&self) -> String {
        format!(
            "# covmis {}\n# config_sha256: {}\n# seed: {}\n# rng: {}\n",
            self.version, self.config_hash, self.seed, self.rng
        )
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "draw_id",
    "variant",
    "gamma_db",
    "vec_mean_db",
    "vec_min_db",
    "vec_max_db",
    "ell2",
    "psi22",
    "omega21",
    "ger_residual",
    "detector",
    "kappa",
    "clairvoyant_c",
    "threshold",
    "n_trials",
    "exceedances",
    "pfa_hat",
    "ci_lo",
    "ci_hi",
    "pd_snr_db",
    "pd_n_trials",
    "pd_exceedances",
    "pd_hat",
    "pd_ci_lo",
    "pd_ci_hi",
    "error",
];

/// One line per `(draw, detector)`.
pub fn sweep_csv(result: &SweepResult, prov: &Provenance) -> String {
    let mut out = prov.header();
    out.push_str(&SWEEP_COLUMNS.join(","));
    out.push('\n');
    for r in &result.rows {
        let vs: Vec<f64> = r.meta.vector_scalars().iter().map(|&x| to_db(x)).collect();
        let (vmean, vmin, vmax) = if vs.is_empty() {
            (None, None, None)
        } else {
            (
                Some(vs.iter().sum::<f64>() / vs.len() as f64),
                Some(vs.iter().copied().fold(f64::INFINITY, f64::min)),
                Some(vs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            )
        };
        let fields = [
            r.draw_id.to_string(),
            r.variant.clone(),
            opt(r.meta.gamma.map(to_db)),
            opt(vmean),
            opt(vmin),
            opt(vmax),
            opt(r.meta.ell2),
            opt(r.meta.psi22),
            opt(r.schur),
            opt(r.ger_residual),
            csv_field(&r.detector),
            opt(r.kappa),
            opt(r.clairvoyant_c),
            r.threshold.to_string(),
            r.pfa.map(|p| p.n_trials.to_string()).unwrap_or_default(),
            r.pfa.map(|p| p.exceedances.to_string()).unwrap_or_default(),
            opt(r.pfa.map(|p| p.p_hat)),
            opt(r.pfa.map(|p| p.ci_lo)),
            opt(r.pfa.map(|p| p.ci_hi)),
            opt(r.pd_snr.map(to_db)),
            r.pd.map(|p| p.n_trials.to_string()).unwrap_or_default(),
            r.pd.map(|p| p.exceedances.to_string()).unwrap_or_default(),
            opt(r.pd.map(|p| p.p_hat)),
            opt(r.pd.map(|p| p.ci_lo)),
            opt(r.pd.map(|p| p.ci_hi)),
            r.error.as_deref().map(csv_field).unwrap_or_default(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn summary_csv(summary: &[DetectorSummary], prov: &Provenance) -> String {
    let mut out = prov.header();
    out.push_str(
        "detector,draws,failures,mean_pfa,std_pfa,mean_log10_pfa,std_log10_pfa,pooled_pfa,pooled_ci_lo,pooled_ci_hi,mean_pd,std_pd\n",
    );
    for s in summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&s.detector),
            s.draws,
            s.failures,
            s.mean_pfa,
            s.std_pfa,
            s.mean_log10_pfa,
            s.std_log10_pfa,
            s.pooled.p_hat,
            s.pooled.ci_lo,
            s.pooled.ci_hi,
            opt(s.mean_pd),
            opt(s.std_pd)
        );
    }
    out
}

/// Generic table writer: `columns` header, then one line per row.
pub fn table_csv(
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    prov: &Provenance,
) -> String {
    let mut out = prov.header();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(
            &row.iter()
                .map(|f| csv_field(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

/// Reduces a sorted curve to at most `max_points` points, keeping both ends.
pub fn thin(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points || max_points < 2 {
        return points.to_vec();
    }
    let step = (points.len() - 1) as f64 / (max_points - 1) as f64;
    (0..max_points)
        .map(|i| points[((i as f64 * step).round() as usize).min(points.len() - 1)])
        .collect()
}

/// A named polyline.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    /// Draw unconnected point markers instead of a polyline.
    pub markers: bool,
}

/// Axis scaling of an SVG plot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Axis {
    #[default]
    Linear,
    Log10,
}

impl Axis {
    fn map(self, x: f64) -> Option<f64> {
        match self {
            Axis::Linear => x.is_finite().then_some(x),
            Axis::Log10 => (x > 0.0 && x.is_finite()).then(|| x.log10()),
        }
    }
}

/// Minimal line plot with a legend.
#[derive(Clone, Debug, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const M: f64 = 60.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let mapped: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter_map(|&(x, y)| Some((self.x_axis.map(x)?, self.y_axis.map(y)?)))
                    .collect()
            })
            .collect();
        let all = mapped.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        let tick = |v: f64, axis: Axis| match axis {
            Axis::Linear => format!("{v:.3}"),
            Axis::Log10 => format!("1e{v:.1}"),
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * M,
            H - 2.0 * M
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                px(xv),
                H - M + 16.0,
                tick(xv, self.x_axis)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                M - 4.0,
                py(yv) + 4.0,
                tick(yv, self.y_axis)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 16.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            xml_escape(&self.y_label)
        );
        for (k, (series, pts)) in self.series.iter().zip(&mapped).enumerate() {
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let dash = if series.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            if series.markers {
                for &(x, y) in pts {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        px(x),
                        py(y),
                        series.color
                    );
                }
            } else {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                    series.color,
                    path.join(" ")
                );
            }
            let ly = M + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}"{dash}/>"#,
                W - M - 150.0,
                W - M - 130.0,
                series.color
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                W - M - 125.0,
                ly + 4.0,
                xml_escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Distinct colours cycled over series.
pub fn palette(i: usize) -> &'static str {
    const C: [&str; 8] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];
    C[i % C.len()]
}
