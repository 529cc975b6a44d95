//! Output files: result JSON with provenance, trace CSV, gnuplot-ready .dat
//! emitters and an SVG polyline for hulls.

use enclosure_core::enclosure::{Classification, IndicatorTrace};
use enclosure_core::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Short hash of the canonical config serialization, embedded in every
/// output file for reproducibility.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Trace CSV: one record per row, classifications appended as comments.
pub fn trace_csv(trace: &IndicatorTrace, classify: &[(f64, Classification)]) -> String {
    let mut out = String::from("n,tau,abs_indicator,log_abs_over_tau,noise_bound,usable\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.n, r.tau, r.abs_indicator, r.log_abs_over_tau, r.noise_bound, r.usable
        ));
    }
    for (t, c) in classify {
        out.push_str(&format!("# classify t={t:.6}: {c:?}\n"));
    }
    out
}

/// Two-column .dat of (tau, log|I|/tau) for plotting.
pub fn trace_dat(trace: &IndicatorTrace) -> String {
    let mut out = String::new();
    for r in trace.records.iter().filter(|r| r.usable) {
        out.push_str(&format!("{:.12e} {:.12e}\n", r.tau, r.log_abs_over_tau));
    }
    out
}

/// Closed polyline .dat of a hull.
pub fn hull_dat(hull: &[[f64; 2]]) -> String {
    let mut out = String::new();
    for v in hull.iter().chain(hull.first()) {
        out.push_str(&format!("{:.12e} {:.12e}\n", v[0], v[1]));
    }
    out
}

/// Minimal SVG with the hull as a polyline, padded 10%.
pub fn hull_svg(hull: &[[f64; 2]]) -> String {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in hull {
        xmin = xmin.min(v[0]);
        xmax = xmax.max(v[0]);
        ymin = ymin.min(v[1]);
        ymax = ymax.max(v[1]);
    }
    let pad = 0.1 * ((xmax - xmin).max(ymax - ymin)).max(1e-6);
    let (x0, y0) = (xmin - pad, ymin - pad);
    let (w, h) = (xmax - xmin + 2.0 * pad, ymax - ymin + 2.0 * pad);
    let scale = 400.0 / w.max(h);
    let pts: Vec<String> = hull
        .iter()
        .chain(hull.first())
        .map(|v| {
            format!(
                "{:.2},{:.2}",
                (v[0] - x0) * scale,
                // SVG y grows downward
                (h - (v[1] - y0)) * scale
            )
        })
        .collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n  <polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n</svg>\n",
        w * scale,
        h * scale,
        w * scale,
        h * scale,
        pts.join(" ")
    )
}

pub fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}
