//! Log-log plot of probe error against δ.

use std::fmt::Write as _;

use crate::pipeline::StudyResult;

const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 50.0;
const COLORS: &[&str] =
    &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.log10()), hi.max(v.log10())));
    if !lo.is_finite() {
        return (-1.0, 0.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// One polyline per probe, markers at each δ, error bars of ±2 stderr.
pub fn error_plot(study: &StudyResult) -> String {
    let rows: Vec<_> = study.runs.iter().flat_map(|r| &r.probes).collect();
    let (x0, x1) = range(rows.iter().map(|p| p.delta));
    let (y0, y1) = range(rows.iter().map(|p| p.error).chain(rows.iter().map(|p| p.error + 2.0 * p.stderr)));
    let sx = |d: f64| M + (d.log10() - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |e: f64| H - M - (e.max(10f64.powf(y0)).log10() - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    for k in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(k));
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{k}</text>"#, H - M + 15.0);
    }
    for k in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(k));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, M - 4.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">delta</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">|H - h|</text>"#,
        H / 2.0,
        H / 2.0
    );

    let n_probes = study.runs.first().map_or(0, |r| r.probes.len());
    for k in 0..n_probes {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<_> = study.runs.iter().filter_map(|r| r.probes.get(k)).collect();
        let path = pts.iter().map(|p| format!("{:.1},{:.1}", sx(p.delta), sy(p.error))).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, r#"<polyline points="{path}" fill="none" stroke="{color}"/>"#);
        for p in &pts {
            let (x, y) = (sx(p.delta), sy(p.error));
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
            let (lo, hi) = (sy(p.error - 2.0 * p.stderr), sy(p.error + 2.0 * p.stderr));
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{lo:.1}" x2="{x:.1}" y2="{hi:.1}" stroke="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">probe {k}</text>"#,
            W - M + 4.0,
            M + 12.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
