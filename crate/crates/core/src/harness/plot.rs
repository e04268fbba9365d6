//! Dependency-free SVG line charts of a run.

use std::fmt::Write as _;
use std::path::Path;

use super::output::{write_text, OutputError};
use super::run::EpochRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotSeries {
    ErrorEnu,
    RaimStatistic,
    Cn0,
}

impl std::str::FromStr for PlotSeries {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "error_enu" => Ok(PlotSeries::ErrorEnu),
            "raim_statistic" => Ok(PlotSeries::RaimStatistic),
            "cn0" => Ok(PlotSeries::Cn0),
            other => Err(format!("unknown series '{other}' (error_enu, raim_statistic, cn0)")),
        }
    }
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Line {
    label: String,
    /// Runs of consecutive finite points.
    segments: Vec<Vec<(f64, f64)>>,
}

fn line(label: String, points: impl Iterator<Item = (f64, Option<f64>)>) -> Line {
    let mut segments = vec![Vec::new()];
    for (t, v) in points {
        match v.filter(|v| v.is_finite()) {
            Some(v) => segments.last_mut().unwrap().push((t, v)),
            None if !segments.last().unwrap().is_empty() => segments.push(Vec::new()),
            None => {}
        }
    }
    segments.retain(|s| !s.is_empty());
    Line { label, segments }
}

fn lines_for(records: &[EpochRecord], series: PlotSeries) -> (Vec<Line>, &'static str) {
    match series {
        PlotSeries::ErrorEnu => (
            vec![
                line("east".into(), records.iter().map(|r| (r.t, Some(r.error_enu.east)))),
                line("north".into(), records.iter().map(|r| (r.t, Some(r.error_enu.north)))),
                line("up".into(), records.iter().map(|r| (r.t, Some(r.error_enu.up)))),
            ],
            "position error (m)",
        ),
        PlotSeries::RaimStatistic => (
            vec![
                line(
                    "statistic".into(),
                    records.iter().map(|r| (r.t, Some(r.raim_statistic))),
                ),
                line(
                    "threshold".into(),
                    records.iter().map(|r| (r.t, Some(r.raim_threshold))),
                ),
            ],
            "RAIM test statistic",
        ),
        PlotSeries::Cn0 => {
            let mut ids: Vec<u32> = records.iter().flat_map(|r| r.svs.iter().map(|s| s.sv_id)).collect();
            ids.sort_unstable();
            ids.dedup();
            let lines = ids
                .into_iter()
                .map(|id| {
                    line(
                        format!("SV {id}"),
                        records.iter().map(move |r| (r.t, r.sv(id).map(|s| s.cn0_dbhz))),
                    )
                })
                .collect();
            (lines, "C/N0 (dB-Hz)")
        }
    }
}

/// Roughly `target` round tick values covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Outage spans from the per-epoch `outage` flag, as [start, end) times.
fn spans(records: &[EpochRecord], on: impl Fn(&EpochRecord) -> bool) -> Vec<(f64, f64)> {
    let dt = if records.len() > 1 {
        records[1].t - records[0].t
    } else {
        0.0
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut start: Option<f64> = None;
    for r in records {
        match (on(r), start) {
            (true, None) => start = Some(r.t),
            (false, Some(s)) => {
                out.push((s, r.t));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, records.last().unwrap().t + dt));
    }
    out
}

/// Renders the chart. Identical input gives identical bytes.
pub fn render_svg(records: &[EpochRecord], series: PlotSeries) -> String {
    let (lines, y_label) = lines_for(records, series);
    let t0 = records.first().map_or(0.0, |r| r.t);
    let t1 = records.last().map_or(1.0, |r| r.t).max(t0 + 1e-9);
    let values = lines.iter().flat_map(|l| l.segments.iter().flatten().map(|p| p.1));
    let (mut y0, mut y1) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-9 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * pw;
    let sy = |v: f64| TOP + (y1 - v) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    for (a, b) in spans(records, |r| r.flags.outage) {
        let _ = writeln!(
            s,
            r##"<rect class="outage" x="{:.2}" y="{TOP}" width="{:.2}" height="{ph}" fill="#bbbbbb" fill-opacity="0.35"/>"##,
            sx(a),
            (sx(b.min(t1)) - sx(a)).max(0.5)
        );
    }
    for t in ticks(t0, t1, 8) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            label(t)
        );
    }
    for v in ticks(y0, y1, 6) {
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, l) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for seg in &l.segments {
            let pts: Vec<String> = seg
                .iter()
                .map(|(t, v)| format!("{:.2},{:.2}", sx(*t), sy(*v)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            l.label
        );
    }
    for r in records.iter().filter(|r| r.raim_detected) {
        let x = sx(r.t);
        let _ = writeln!(
            s,
            r##"<path class="detection" d="M{x:.2},{:.2} l-4,-7 h8 z" fill="#d62728"/>"##,
            TOP + ph
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg_plot(records: &[EpochRecord], series: PlotSeries, path: &Path) -> Result<(), OutputError> {
    if records.len() < 2 {
        return Err(OutputError::Format {
            path: path.display().to_string(),
            row: 0,
            message: "a plot needs at least two epochs".into(),
        });
    }
    write_text(path, &render_svg(records, series))
}
