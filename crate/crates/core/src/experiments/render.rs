//! CSV, JSON and SVG outputs of figure experiments.

use std::fmt::Write as _;
use std::path::Path;

use super::{BandSummary, FigureReport};
use crate::error::Result;
use crate::io::{fmt_f64, write_atomic, write_csv, write_json};

pub(super) fn write_figure(report: &FigureReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let d = report.bands.first().map_or(1, |b| b.points.first().map_or(1, Vec::len));
    let xs: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();

    let mut header: Vec<&str> = vec!["n"];
    header.extend(xs.iter().map(String::as_str));
    header.extend(["truth", "mean", "lo", "hi"]);
    let rows = report.bands.iter().flat_map(|b| {
        (0..b.points.len()).map(move |q| {
            let mut r = vec![fmt_f64(b.n)];
            r.extend(b.points[q].iter().map(|x| fmt_f64(*x)));
            r.extend([b.truth[q], b.mean[q], b.lo[q], b.hi[q]].map(fmt_f64));
            r
        })
    });
    write_csv(&dir.join("bands.csv"), &header, rows)?;

    let mut dheader: Vec<&str> = vec!["n", "draw"];
    dheader.extend(xs.iter().map(String::as_str));
    dheader.push("f");
    let rows = report.bands.iter().flat_map(|b| {
        b.kept_draws.iter().enumerate().flat_map(move |(k, f)| {
            (0..b.points.len()).map(move |q| {
                let mut r = vec![fmt_f64(b.n), k.to_string()];
                r.extend(b.points[q].iter().map(|x| fmt_f64(*x)));
                r.push(fmt_f64(f[q]));
                r
            })
        })
    });
    write_csv(&dir.join("draws.csv"), &dheader, rows)?;

    write_json(&dir.join("summary.json"), report)?;
    let svg = if d == 1 { line_plot(&report.bands) } else { heat_plot(report.bands.last()) };
    write_atomic(&dir.join("plot.svg"), svg.as_bytes())
}

const W: f64 = 320.0;
const H: f64 = 220.0;

fn polyline(out: &mut String, xs: &[f64], ys: &[f64], ox: f64, lo: f64, hi: f64, style: &str) {
    let span = (hi - lo).max(1e-12);
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| format!("{:.2},{:.2}", ox + 10.0 + x * (W - 20.0), 10.0 + (hi - y) / span * (H - 20.0)))
        .collect();
    let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "));
}

/// One panel per `n`: truth, mean and band limits.
fn line_plot(bands: &[BandSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{H}">"#,
        W * bands.len().max(1) as f64
    );
    for (k, b) in bands.iter().enumerate() {
        let ox = W * k as f64;
        let xs: Vec<f64> = b.points.iter().map(|p| p[0]).collect();
        let all = b.lo.iter().chain(&b.hi).chain(&b.truth).filter(|v| v.is_finite());
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), v| (a.min(*v), c.max(*v)));
        let _ = writeln!(out, r#"<rect x="{ox}" y="0" width="{W}" height="{H}" fill="white" stroke="gray"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" font-size="11">n = {:e}</text>"#, ox + 14.0, b.n);
        polyline(&mut out, &xs, &b.lo, ox, lo, hi, r#"stroke="lightblue""#);
        polyline(&mut out, &xs, &b.hi, ox, lo, hi, r#"stroke="lightblue""#);
        polyline(&mut out, &xs, &b.mean, ox, lo, hi, r#"stroke="blue""#);
        polyline(&mut out, &xs, &b.truth, ox, lo, hi, r#"stroke="black" stroke-dasharray="4 2""#);
    }
    out.push_str("</svg>\n");
    out
}

/// Posterior mean and truth side by side as gray-scale cells.
fn heat_plot(band: Option<&BandSummary>) -> String {
    let mut out = String::new();
    let Some(b) = band else {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n".into();
    };
    let (lo, hi) = b.truth.iter().chain(&b.mean).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), v| (a.min(*v), c.max(*v)));
    let span = (hi - lo).max(1e-12);
    let cells = (b.points.len() as f64).sqrt().ceil().max(1.0);
    let s = (H - 20.0) / cells;
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{H}">"#, 2.0 * H);
    for (panel, vals) in [&b.mean, &b.truth].into_iter().enumerate() {
        let ox = 10.0 + panel as f64 * H;
        for (p, v) in b.points.iter().zip(vals) {
            let g = (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({g},{g},{g})"/>"#,
                ox + p[0] * (H - 20.0),
                10.0 + (1.0 - p[1]) * (H - 20.0) - s,
                s,
                s
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
