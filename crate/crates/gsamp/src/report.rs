//! Report files: per-step MSE, per-estimator summary, an SVG line chart,
//! trial flags and a metadata block.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! an emitted CSV restores the in-memory values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gsamp_core::MseReport;

use crate::error::{Error, Result};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `estimator,t,mse_mean` with `t` starting at 1.
pub fn mse_csv(report: &MseReport) -> String {
    let mut s = String::from("estimator,t,mse_mean\n");
    for e in &report.estimators {
        for (i, v) in e.mse_mean.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", e.name, i + 1, v);
        }
    }
    s
}

/// `estimator,avg_mse`.
pub fn summary_csv(report: &MseReport) -> String {
    let mut s = String::from("estimator,avg_mse\n");
    for e in &report.estimators {
        let _ = writeln!(s, "{},{}", e.name, e.avg_mse);
    }
    s
}

/// `estimator,trial,t,reason` for every flagged trial.
pub fn flags_csv(report: &MseReport) -> String {
    let mut s = String::from("estimator,trial,t,reason\n");
    for e in &report.estimators {
        for f in &e.flags {
            let _ = writeln!(s, "{},{},{},\"{}\"", e.name, f.trial, f.t + 1, f.reason.replace('"', "'"));
        }
    }
    s
}

/// `key: value` lines followed by the verbatim config text.
pub fn metadata_text(report: &MseReport, extra: &[(String, String)], config_text: &str) -> String {
    let mut s = String::new();
    for (k, v) in report.metadata.iter().chain(extra) {
        let _ = writeln!(s, "{k}: {v}");
    }
    for e in &report.estimators {
        let _ = writeln!(s, "flagged_trials[{}]: {}", e.name, e.flags.len());
    }
    s.push_str("--- config ---\n");
    s.push_str(config_text);
    if !config_text.is_empty() && !config_text.ends_with('\n') {
        s.push('\n');
    }
    s
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart of MSE over time, one polyline per estimator.
pub fn svg_chart(report: &MseReport, log_scale: bool) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (80.0, 170.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let steps = report.estimators.iter().map(|e| e.mse_mean.len()).max().unwrap_or(0);
    let tr = |v: f64| if log_scale { v.max(f64::MIN_POSITIVE).log10() } else { v };
    let values = report.estimators.iter().flat_map(|e| e.mse_mean.iter().copied());
    let positive_min = values.clone().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if log_scale && positive_min.is_finite() { positive_min } else { f64::MIN_POSITIVE };
    let clamp = |v: f64| if log_scale { tr(v.max(floor)) } else { v };
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(clamp(v)), hi.max(clamp(v)))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if log_scale {
        (lo, hi) = (lo.floor(), hi.ceil());
    } else {
        lo = lo.min(0.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let x_of = |i: usize| left + if steps > 1 { pw * i as f64 / (steps - 1) as f64 } else { pw / 2.0 };
    let y_of = |v: f64| top + ph * (1.0 - (clamp(v) - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let y_ticks: Vec<f64> = if log_scale {
        let step = ((hi - lo) / 8.0).ceil().max(1.0);
        let mut t = Vec::new();
        let mut d = lo;
        while d <= hi + 1e-9 {
            t.push(d);
            d += step;
        }
        t
    } else {
        (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).collect()
    };
    for t in y_ticks {
        let y = top + ph * (1.0 - (t - lo) / (hi - lo));
        let label = if log_scale { format!("1e{t}") } else { format!("{t:.3e}") };
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    if steps > 0 {
        let every = (steps / 10).max(1);
        for i in (0..steps).step_by(every) {
            let x = x_of(i);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                top + ph + 18.0,
                i + 1
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean MSE{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        if log_scale { " (log scale)" } else { "" }
    );
    for (k, e) in report.estimators.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = e
            .mse_mean
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", x_of(i), y_of(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&e.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub mse: PathBuf,
    pub summary: PathBuf,
    pub chart: PathBuf,
    pub flags: PathBuf,
    pub metadata: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReportPaths {
            mse: dir.join("mse.csv"),
            summary: dir.join("summary.csv"),
            chart: dir.join("mse.svg"),
            flags: dir.join("flags.csv"),
            metadata: dir.join("metadata.txt"),
        }
    }
}

pub fn write_report(
    report: &MseReport,
    dir: &Path,
    log_scale: bool,
    extra_metadata: &[(String, String)],
    config_text: &str,
) -> Result<ReportPaths> {
    if report.estimators.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: "refusing to write an empty report".into(),
        });
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = ReportPaths::in_dir(dir);
    write_file(&p.mse, &mse_csv(report))?;
    write_file(&p.summary, &summary_csv(report))?;
    write_file(&p.chart, &svg_chart(report, log_scale))?;
    write_file(&p.flags, &flags_csv(report))?;
    write_file(&p.metadata, &metadata_text(report, extra_metadata, config_text))?;
    Ok(p)
}

/// Parses an `estimator,t,mse_mean` file into per-estimator trajectories in
/// first-appearance order.
pub fn read_mse_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let bad = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message,
        };
        let rec = rec.map_err(|e| bad(0, e.to_string()))?;
        if rec.len() != 3 {
            return Err(bad(1, format!("expected 3 fields, found {}", rec.len())));
        }
        let t: usize = rec[1].parse().map_err(|_| bad(2, format!("bad step `{}`", &rec[1])))?;
        let v: f64 = rec[2].parse().map_err(|_| bad(3, format!("bad value `{}`", &rec[2])))?;
        let pos = match out.iter().position(|(n, _)| n == &rec[0]) {
            Some(p) => p,
            None => {
                out.push((rec[0].to_string(), Vec::new()));
                out.len() - 1
            }
        };
        let series = &mut out[pos].1;
        if t != series.len() + 1 {
            return Err(bad(2, format!("expected t={}, found {t}", series.len() + 1)));
        }
        series.push(v);
    }
    Ok(out)
}

/// Parses an `estimator,avg_mse` file.
pub fn read_summary_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                row: i + 2,
                column: 2,
                message,
            };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let v: f64 = rec
                .get(1)
                .ok_or_else(|| bad("missing avg_mse".into()))?
                .parse()
                .map_err(|_| bad(format!("bad value `{}`", &rec[1])))?;
            Ok((rec[0].to_string(), v))
        })
        .collect()
}

/// Plain-text `estimator  avg_mse` table.
pub fn summary_table(report: &MseReport) -> String {
    let width = report.estimators.iter().map(|e| e.name.len()).max().unwrap_or(9).max(9);
    let mut s = format!("{:<width$}  {:>14}  {}\n", "estimator", "avg_mse", "flagged");
    for e in &report.estimators {
        let _ = writeln!(s, "{:<width$}  {:>14.6}  {}", e.name, e.avg_mse, e.flags.len());
    }
    s
}
