//! CSV persistence and SVG line charts for sweep tables.
//!
//! CSV layout: `# key: value` comment lines carrying the metadata, then the
//! header `x,method,mean,stderr,reps`, then one line per row. Floats are
//! written with 17 significant digits so they re-parse to the same bits. A
//! missing standard error is an empty field.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{SweepRow, SweepTable};

pub const CSV_HEADER: &str = "x,method,mean,stderr,reps";

fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    for (k, v) in &table.metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let stderr = row.stderr.map(float17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            float17(row.x),
            row.method,
            float17(row.mean),
            stderr,
            row.reps
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim_start().split_once(": ") {
                table.metadata.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_HEADER {
                return Err(err(format!(
                    "expected header `{CSV_HEADER}`, found `{line}`"
                )));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let finite = |name: &str, s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| err(format!("{name} `{s}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(format!("{name} is not finite")));
            }
            Ok(v)
        };
        let x = finite("x", fields[0])?;
        let method = fields[1].trim();
        if method.is_empty() {
            return Err(err("empty method label".into()));
        }
        let mean = finite("mean", fields[2])?;
        let stderr = if fields[3].trim().is_empty() {
            None
        } else {
            let s = finite("stderr", fields[3])?;
            if s < 0.0 {
                return Err(err(format!("negative stderr {s}")));
            }
            Some(s)
        };
        let reps: u64 = fields[4]
            .trim()
            .parse()
            .map_err(|_| err(format!("reps `{}` is not a count", fields[4])))?;
        if reps == 0 {
            return Err(err("reps must be >= 1".into()));
        }
        table.rows.push(SweepRow {
            x,
            method: method.to_string(),
            mean,
            stderr,
            reps,
        });
    }
    if !seen_header {
        return Err(Error::Parse {
            line: text.lines().count() + 1,
            message: "missing header".into(),
        });
    }
    Ok(table)
}

pub fn write_csv(table: &SweepTable, path: &Path) -> Result<()> {
    fs::write(path, render_csv(table)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<SweepTable> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders one polyline per method with axes and a legend.
pub fn render_svg(table: &SweepTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::domain("cannot plot an empty table"));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (0.0f64, f64::NEG_INFINITY);
    for r in &table.rows {
        x_min = x_min.min(r.x);
        x_max = x_max.max(r.x);
        y_min = y_min.min(r.mean);
        y_max = y_max.max(r.mean);
    }
    if x_max == x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    y_max *= 1.05;
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;
    let x_label = table.meta("x_label").unwrap_or("x");

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    svg.push_str(r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    svg.push('\n');
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    svg.push_str("</g>\n");
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 {:.2})">normalized regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, method) in table.methods().into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points = table
            .series(method)
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.x), sy(r.mean)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>"#
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{:.0}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12">{}</text></g>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(method)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg(table: &SweepTable, path: &Path) -> Result<()> {
    let svg = render_svg(table)?;
    fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
