//! CSV tables, the text summary and SVG plots.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::config::ExperimentKind;
use crate::predicate::Outcome;
use crate::quantity::Record;
use crate::stats::Series;

pub const SCHEMA: &str = "schema=1";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

/// The two header lines every CSV starts with; only the second varies between runs.
fn header(w: &mut impl Write, kind: ExperimentKind, generated_unix: u64) -> io::Result<()> {
    writeln!(w, "{SCHEMA}")?;
    writeln!(w, "# generated_unix={generated_unix} kind={kind}")
}

/// Columns: `quantity,N,seed,t,scale,value`. Pooled rows leave `seed` empty.
pub fn write_records(w: &mut impl Write, kind: ExperimentKind, generated_unix: u64, records: &[Record]) -> io::Result<()> {
    header(w, kind, generated_unix)?;
    writeln!(w, "quantity,N,seed,t,scale,value")?;
    for r in records {
        let seed = r.seed.map_or(String::new(), |s| s.to_string());
        writeln!(w, "{},{},{},{},{},{:e}", r.quantity, r.n, seed, opt(r.time), opt(r.scale), r.value)?;
    }
    Ok(())
}

/// Columns: `quantity,t,scale,N,count,aggregate,value,stderr,slope,slope_stderr`.
pub fn write_summary(w: &mut impl Write, kind: ExperimentKind, generated_unix: u64, series: &[Series]) -> io::Result<()> {
    header(w, kind, generated_unix)?;
    writeln!(w, "quantity,t,scale,N,count,aggregate,value,stderr,slope,slope_stderr")?;
    for s in series {
        let (slope, se) = s.fit.map_or((String::new(), String::new()), |f| (format!("{:e}", f.slope), format!("{:e}", f.slope_stderr)));
        for p in &s.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{:e},{:e},{},{}",
                s.key.quantity,
                opt(s.key.time),
                opt(s.key.scale),
                p.n,
                p.count,
                s.aggregate.name(),
                p.value,
                p.stderr,
                slope,
                se
            )?;
        }
    }
    Ok(())
}

/// Columns: `predicate,observed,pass`.
pub fn write_outcomes(w: &mut impl Write, kind: ExperimentKind, generated_unix: u64, outcomes: &[Outcome]) -> io::Result<()> {
    header(w, kind, generated_unix)?;
    writeln!(w, "predicate,observed,pass")?;
    for o in outcomes {
        writeln!(w, "\"{}\",\"{}\",{}", o.description, o.observed, u8::from(o.passed))?;
    }
    Ok(())
}

/// Fixed-width table for the terminal.
pub fn format_summary(series: &[Series]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>6} {:>6} {:>6} {:>5} {:>12} {:>10} {:>16}", "quantity", "t", "scale", "N", "runs", "value", "stderr", "slope");
    for se in series {
        let slope = se.fit.map_or(String::new(), |f| format!("{:.3}±{:.3}", f.slope, f.slope_stderr));
        for (i, p) in se.points.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<28} {:>6} {:>6} {:>6} {:>5} {:>12.4e} {:>10.2e} {:>16}",
                se.key.quantity,
                opt(se.key.time),
                opt(se.key.scale),
                p.n,
                p.count,
                p.value,
                p.stderr,
                if i == 0 { slope.as_str() } else { "" }
            );
        }
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log plot of the per-N aggregates with error bars and the fitted line.
///
/// Returns `None` when fewer than two sizes have a positive aggregate.
pub fn svg_plot(series: &Series) -> Option<String> {
    let pts: Vec<_> = series.points.iter().filter(|p| p.value > 0.0 && p.value.is_finite()).collect();
    if pts.len() < 2 {
        return None;
    }
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (80.0, 20.0, 40.0, 60.0);
    let lx: Vec<f64> = pts.iter().map(|p| (p.n as f64).log10()).collect();
    let lo_v = |p: &&crate::stats::PointStats| (p.value - p.stderr).max(p.value * 1e-3);
    let ly_min = pts.iter().map(|p| lo_v(p).log10()).fold(f64::INFINITY, f64::min);
    let ly_max = pts.iter().map(|p| (p.value + p.stderr).log10()).fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1) = (lx[0] - 0.1, lx[lx.len() - 1] + 0.1);
    let (y0, y1) = if ly_max - ly_min < 0.5 {
        let mid = 0.5 * (ly_max + ly_min);
        (mid - 0.25, mid + 0.25)
    } else {
        (ly_min - 0.05 * (ly_max - ly_min), ly_max + 0.05 * (ly_max - ly_min))
    };
    let sx = |v: f64| left + (v - x0) / (x1 - x0) * (w - left - right);
    let sy = |v: f64| top + (y1 - v) / (y1 - y0) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = match series.fit {
        Some(f) => format!("{}  (slope {:.3} ± {:.3})", series.key.label(), f.slope, f.slope_stderr),
        None => series.key.label(),
    };
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(&title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for p in &pts {
        let x = sx((p.n as f64).log10());
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#bbb"/>"##, h - bottom, h - bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, h - bottom + 20.0, p.n);
    }
    let mut d = y0.ceil() as i32;
    while (d as f64) <= y1 {
        let y = sy(d as f64);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#eee"/>"##, w - right);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">1e{d}</text>"#, left - 6.0, y + 4.0);
        d += 1;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">N</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        series.aggregate.name()
    );
    if let Some(f) = series.fit {
        let line = |lx: f64| sy((f.intercept + f.slope * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            sx(lx[0]),
            line(lx[0]),
            sx(lx[lx.len() - 1]),
            line(lx[lx.len() - 1])
        );
    }
    for p in &pts {
        let x = sx((p.n as f64).log10());
        let (ya, yb) = (sy(lo_v(p).log10()), sy((p.value + p.stderr).log10()));
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{ya:.1}" x2="{x:.1}" y2="{yb:.1}" stroke="#1f77b4"/>"##);
        let _ = writeln!(s, r##"<circle cx="{x:.1}" cy="{:.1}" r="4" fill="#1f77b4"/>"##, sy(p.value.log10()));
    }
    s.push_str("</svg>\n");
    Some(s)
}
