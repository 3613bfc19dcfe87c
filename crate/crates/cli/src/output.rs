//! CSV and SVG writers, and the CSV reader used by `verify --check-file`.

use std::fmt::Write as _;
use std::path::Path;

use crdflab_core::{RDCurve, RDPoint};

use crate::config::RunConfig;
use crate::CliError;

fn fmt_param(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// Header line, optional note line, then `distortion,rate_bits` rows with 12 significant digits.
pub fn curve_csv(curve: &RDCurve, config: &RunConfig) -> String {
    let mut s = format!(
        "# curve={} lambda={} sigma_v={} sigma_n={} T={}\n",
        curve.label(),
        fmt_param(config.scenario.lambda),
        fmt_param(config.sigma_v()),
        fmt_param(config.sigma_n()),
        config.scenario.horizon
    );
    if let Some(note) = curve.note() {
        let _ = writeln!(s, "# note={note}");
    }
    s.push_str("distortion,rate_bits\n");
    for p in curve.points() {
        let _ = writeln!(s, "{:.11e},{:.11e}", p.distortion, p.rate);
    }
    s
}

/// Label and raw `(distortion, rate)` rows of a file written by [`curve_csv`].
/// The label comes from the header when present, else from the file stem.
pub fn read_csv_points(path: &Path) -> Result<(String, Vec<(f64, f64)>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve").to_string();
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(l) = rest.split_whitespace().find_map(|kv| kv.strip_prefix("curve=")) {
                label = l.to_string();
            }
            continue;
        }
        if line.is_empty() || line.starts_with("distortion") {
            continue;
        }
        let bad = || CliError::Config(format!("{}:{}: expected 'distortion,rate_bits'", path.display(), n + 1));
        let (d, r) = line.split_once(',').ok_or_else(bad)?;
        let d: f64 = d.trim().parse().map_err(|_| bad())?;
        let r: f64 = r.trim().parse().map_err(|_| bad())?;
        rows.push((d, r));
    }
    Ok((label, rows))
}

pub fn read_curve_csv(path: &Path) -> Result<RDCurve, CliError> {
    let (label, rows) = read_csv_points(path)?;
    let points = rows.into_iter().map(|(d, r)| RDPoint::new(d, r)).collect();
    RDCurve::new(label, points).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Combined rate-distortion plot with a logarithmic distortion axis over
/// `[d_lo, d_hi]`. No external fonts, scripts or images.
pub fn curves_svg(curves: &[RDCurve], config: &RunConfig, d_lo: f64, d_hi: f64) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let (lx0, lx1) = (d_lo.log10(), d_hi.log10());
    let r_max = curves
        .iter()
        .flat_map(|c| c.points())
        .filter(|p| p.distortion >= d_lo && p.distortion <= d_hi)
        .map(|p| p.rate)
        .fold(0.0, f64::max);
    let r_top = r_max.ceil().max(1.0);
    let px = |d: f64| left + (d.log10() - lx0) / (lx1 - lx0) * pw;
    let py = |r: f64| top + ph - r / r_top * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">lambda={} sigma_v={} sigma_n={} T={}</text>"#,
        left + pw / 2.0,
        fmt_param(config.scenario.lambda),
        fmt_param(config.sigma_v()),
        fmt_param(config.sigma_n()),
        config.scenario.horizon
    );
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    for e in lx0.ceil() as i32..=lx1.floor() as i32 {
        let x = px(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, top + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, top + ph + 16.0);
    }
    let step = if r_top > 8.0 { 2.0 } else { 1.0 };
    let mut r = 0.0;
    while r <= r_top + 1e-9 {
        let y = py(r);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{r}</text>"#, left - 6.0, y + 4.0);
        r += step;
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Average distortion D</text>"#, left + pw / 2.0, h - 18.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">Average rate [bits]</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c
            .points()
            .iter()
            .filter(|p| p.distortion >= d_lo && p.distortion <= d_hi)
            .map(|p| format!("{:.2},{:.2}", px(p.distortion), py(p.rate)))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = top + 16.0 + 16.0 * i as f64;
        let lx = left + pw - 190.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 24.0, ly - 4.0);
        let mut name = escape(c.label());
        if let Some(note) = c.note() {
            name = format!("{name} ({})", escape(note));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{name}</text>"#, lx + 30.0);
    }
    s.push_str("</svg>\n");
    s
}
