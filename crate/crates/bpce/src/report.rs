//! Serialization of tail estimates for archival and plotting.
//!
//! Three formats, all deterministic byte for byte given the same inputs:
//! a commented CSV for spreadsheets, a JSON document for downstream tooling
//! (`schema` is bumped on any breaking layout change), and plain two-column
//! data plus a self-contained SVG for plots.

use std::collections::BTreeMap;
use std::io;
use std::io::Write;

use serde::Serialize;

use crate::analysis::{PowerLawFit, SandwichReport, XTransform};
use crate::sim::TailEstimate;

/// Everything a run wants to archive about one tail estimate.
///
/// Field order is the JSON layout; optional sections disappear rather than
/// serializing as null.
#[derive(Clone, Debug, Serialize)]
pub struct TailReport<'a> {
    pub schema: u32,
    /// Echo of the run configuration, stringly typed, sorted by key.
    pub settings: BTreeMap<String, String>,
    pub estimate: &'a TailEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<XTransform>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichReport>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl<'a> TailReport<'a> {
    pub fn new(estimate: &'a TailEstimate) -> Self {
        TailReport {
            schema: SCHEMA_VERSION,
            settings: BTreeMap::new(),
            estimate,
            transform: None,
            fit: None,
            expected_slope: None,
            sandwich: None,
        }
    }
}

pub fn write_json<W: Write>(mut out: W, report: &TailReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, report).map_err(io::Error::from)?;
    writeln!(out)
}

/// Commented CSV: `#` header with the run settings, then one row per
/// threshold.
pub fn write_csv<W: Write>(
    mut out: W,
    est: &TailEstimate,
    settings: &BTreeMap<String, String>,
) -> io::Result<()> {
    writeln!(out, "# mode: {}", est.mode)?;
    for (k, v) in settings {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# replicates: {}", est.replicates)?;
    writeln!(out, "# samples_per_replicate: {}", est.samples_per_replicate)?;
    writeln!(out, "threshold,p_hat,std_err,n_censored")?;
    for j in 0..est.len() {
        writeln!(
            out,
            "{},{},{},{}",
            est.thresholds[j], est.p_hat[j], est.std_err[j], est.n_censored[j]
        )?;
    }
    Ok(())
}

/// Two columns, threshold and estimate, ready for `plot "file" with points`.
pub fn write_plot_data<W: Write>(mut out: W, est: &TailEstimate) -> io::Result<()> {
    writeln!(out, "# {}: threshold p_hat", est.mode)?;
    for (t, p) in est.thresholds.iter().zip(&est.p_hat) {
        writeln!(out, "{t} {p}")?;
    }
    Ok(())
}

/// Self-contained SVG of `log p_hat` against the fit abscissa, with two
/// standard errors per point and the fitted line when one is supplied.
/// Presentation only: numbers belong to the CSV and JSON outputs.
pub fn write_svg_plot<W: Write>(
    mut out: W,
    est: &TailEstimate,
    transform: XTransform,
    fit: Option<&PowerLawFit>,
) -> io::Result<()> {
    const W_PX: f64 = 640.0;
    const H_PX: f64 = 440.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;

    // (x, log p, sd of log p)
    let pts: Vec<(f64, f64, f64)> = est
        .thresholds
        .iter()
        .zip(est.p_hat.iter().zip(&est.std_err))
        .filter_map(|(t, (p, se))| {
            let x = transform.apply(*t);
            (x.is_finite() && *p > 0.0).then(|| (x, p.ln(), se / p))
        })
        .collect();

    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W_PX}" height="{H_PX}" viewBox="0 0 {W_PX} {H_PX}">"#
    )?;
    writeln!(out, r#"<rect width="{W_PX}" height="{H_PX}" fill="white"/>"#)?;
    if pts.is_empty() {
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif">no positive estimates to plot</text>"#,
            W_PX / 2.0,
            H_PX / 2.0
        )?;
        return writeln!(out, "</svg>");
    }

    let (mut x0, mut x1) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| {
        (a.min(p.0), b.max(p.0))
    });
    let (mut y0, mut y1) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| {
        (a.min(p.1 - 2.0 * p.2), b.max(p.1 + 2.0 * p.2))
    });
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (xpad, ypad) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
    let (x0, x1, y0, y1) = (x0 - xpad, x1 + xpad, y0 - ypad, y1 + ypad);
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W_PX - L - R);
    let py = |y: f64| T + (y1 - y) / (y1 - y0) * (H_PX - T - B);

    writeln!(
        out,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W_PX - L - R,
        H_PX - T - B
    )?;
    let xlabel = match transform {
        XTransform::Log => "log threshold",
        XTransform::LogLog => "log log threshold",
    };
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{} tail</text>"#,
        W_PX / 2.0,
        T - 14.0,
        est.mode
    )?;
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{xlabel}</text>"#,
        W_PX / 2.0,
        H_PX - 12.0
    )?;
    writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">log p</text>"#,
        (T + H_PX - B) / 2.0,
        (T + H_PX - B) / 2.0
    )?;
    for i in 0..=3 {
        let xt = x0 + (x1 - x0) * i as f64 / 3.0;
        let yt = y0 + (y1 - y0) * i as f64 / 3.0;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.2}</text>"#,
            px(xt),
            H_PX - B + 16.0,
            xt
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{:.2}</text>"#,
            L - 6.0,
            py(yt) + 4.0,
            yt
        )?;
    }

    if let Some(fit) = fit {
        let (fx0, fx1) = (
            transform.apply(fit.window.0).max(x0),
            transform.apply(fit.window.1).min(x1),
        );
        writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="firebrick" stroke-width="1.5"/>"#,
            px(fx0),
            py(fit.intercept + fit.slope * fx0),
            px(fx1),
            py(fit.intercept + fit.slope * fx1)
        )?;
    }
    for (x, y, tau) in &pts {
        if *tau > 0.0 {
            writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="steelblue"/>"#,
                px(*x),
                py(y - 2.0 * tau),
                px(*x),
                py(y + 2.0 * tau)
            )?;
        }
        writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#,
            px(*x),
            py(*y)
        )?;
    }
    writeln!(out, "</svg>")
}
