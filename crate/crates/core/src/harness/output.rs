//! CSV and SVG writers. Output depends only on the inputs, so identical
//! records give identical bytes; floats use Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::solvers::IterationRecord;

use super::{manifold_dimension, HarnessError, PerfProfile, RunRecord};

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "case_id",
    "method",
    "n",
    "lambda0",
    "seed",
    "iterations",
    "cpu_seconds",
    "f_final",
    "det_final",
    "termination",
    "criticality_residual",
];

pub const TRACE_COLUMNS: [&str; 6] = ["k", "f_val", "step_dist", "lambda_k", "inner_iters", "cpu_seconds"];

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Summary CSV with [`SUMMARY_COLUMNS`]; header only for no records.
pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let rows = records.iter().map(|r| {
        vec![
            r.case_id.clone(),
            r.method.to_string(),
            r.n.to_string(),
            r.lambda0.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.cpu_seconds.to_string(),
            r.f_final.to_string(),
            r.det_final.to_string(),
            r.termination_str().to_string(),
            r.criticality_residual.to_string(),
        ]
    });
    write_rows(path, &SUMMARY_COLUMNS, rows)
}

/// One row per iterate, `k = 0` included.
pub fn emit_trace_csv(trace: &[IterationRecord], path: &Path) -> Result<(), HarnessError> {
    let rows = trace.iter().map(|t| {
        vec![
            t.k.to_string(),
            t.f_val.to_string(),
            t.step_dist.to_string(),
            t.lambda_k.to_string(),
            t.inner_iters.to_string(),
            t.cpu_seconds.to_string(),
        ]
    });
    write_rows(path, &TRACE_COLUMNS, rows)
}

pub(crate) fn emit_violations_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let rows = records.iter().flat_map(|r| {
        let problem = r.termination.is_none().then(|| r.error.clone().unwrap_or_default());
        let msgs = r.violations.iter().cloned().chain(problem);
        msgs.map(move |m| vec![r.case_id.clone(), r.method.to_string(), m])
    });
    write_rows(path, &["case_id", "method", "violation"], rows)
}

pub(crate) fn emit_lambda_table(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let rows = records.iter().map(|r| {
        vec![
            r.lambda0.to_string(),
            r.lambda_final.to_string(),
            r.iterations.to_string(),
            r.doubling_count.to_string(),
            r.termination_str().to_string(),
            r.stationary_gap.to_string(),
        ]
    });
    let header = ["lambda0", "lambda_final", "iterations", "doublings", "termination", "dist_to_critical"];
    write_rows(path, &header, rows)
}

pub(crate) fn emit_scaling_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let rows = records.iter().map(|r| {
        vec![
            r.n.to_string(),
            manifold_dimension(r.n).to_string(),
            r.iterations.to_string(),
            r.cpu_seconds.to_string(),
            r.det_final.to_string(),
            r.stationary_gap.to_string(),
            r.termination_str().to_string(),
        ]
    });
    let header = ["n", "manifold_dim", "iterations", "cpu_seconds", "det_final", "det_gap", "termination"];
    write_rows(path, &header, rows)
}

/// `tau` followed by one `ρ` column per method.
pub fn emit_profile_csv(profile: &PerfProfile, path: &Path) -> Result<(), HarnessError> {
    let mut header = vec!["tau".to_string()];
    header.extend(profile.methods.iter().map(|m| m.to_string()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = profile.taus.iter().enumerate().map(|(i, tau)| {
        let mut row = vec![tau.to_string()];
        row.extend(profile.rho.iter().map(|c| c[i].to_string()));
        row
    });
    write_rows(path, &header, rows)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Line chart with one polyline per series, linear axes fitted to the data.
fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 <= x1) {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left:.1} {top:.1} L{left:.1} {bottom:.1} L{right:.1} {bottom:.1}" fill="none" stroke="black"/>"#
    );
    for (v, anchor_x) in [(x0, left), (x1, right)] {
        let _ = writeln!(s, r#"<text x="{anchor_x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, bottom + 16.0, tick(v));
    }
    for (v, anchor_y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, anchor_y + 4.0, tick(v));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: &Path, body: &str) -> Result<(), HarnessError> {
    fs::write(path, body).map_err(|e| HarnessError::io(path, e))
}

/// `ρ_s` against `log₂ τ` as a step function, one polyline per method.
pub fn emit_profile_svg(profile: &PerfProfile, path: &Path) -> Result<(), HarnessError> {
    let series: Vec<Series> = profile
        .methods
        .iter()
        .zip(&profile.rho)
        .map(|(m, curve)| {
            let mut points = Vec::with_capacity(2 * curve.len());
            for (i, (&tau, &r)) in profile.taus.iter().zip(curve).enumerate() {
                if i > 0 {
                    points.push((tau.log2(), curve[i - 1]));
                }
                points.push((tau.log2(), r));
            }
            Series { label: m.to_string(), points }
        })
        .collect();
    let title = format!("Performance profile ({})", profile.metric);
    write_file(path, &line_chart(&title, "log2 tau", "rho(tau)", &series))
}

/// `log₁₀ |f(X^k) − f_ref|` against `k`, one polyline per trace.
pub fn emit_convergence_svg(
    traces: &[(String, &[IterationRecord])],
    f_ref: f64,
    path: &Path,
) -> Result<(), HarnessError> {
    let series: Vec<Series> = traces
        .iter()
        .map(|(label, trace)| Series {
            label: label.clone(),
            points: trace
                .iter()
                .map(|t| (t.k as f64, (t.f_val - f_ref).abs().max(1e-16).log10()))
                .collect(),
        })
        .collect();
    write_file(path, &line_chart("Convergence", "iteration k", "log10 |f(X^k) - f(X*)|", &series))
}

/// CPU seconds against manifold dimension `n(n+1)/2`.
pub fn emit_scaling_svg(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let series = [Series {
        label: "adap".to_string(),
        points: records
            .iter()
            .map(|r| (manifold_dimension(r.n) as f64, r.cpu_seconds))
            .collect(),
    }];
    write_file(path, &line_chart("CPU time by dimension", "manifold dimension", "CPU seconds", &series))
}
