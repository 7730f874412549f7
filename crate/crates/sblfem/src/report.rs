//! CSV emission/parsing for sweep records and deterministic semilog SVG
//! plots (error percentage against DOF).

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::ConvergenceRecord;

pub const CSV_HEADER: &str = "eps1,eps2,p,dof,rel_err_pct,wall_time_s,regime";

/// Write records as CSV. Floats carry 17 significant digits so parsing the
/// file reproduces them bit-exactly; lines end with "\n".
pub fn emit_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>, line: &str| -> Result<()> {
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))
    };
    write(&mut out, CSV_HEADER)?;
    for r in records {
        let line = format!(
            "{:.16e},{:.16e},{},{},{:.16e},{:.16e},{}",
            r.eps1, r.eps2, r.p, r.dof, r.rel_err_pct, r.wall_time_s, r.regime
        );
        write(&mut out, &line)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Inverse of emit_csv.
pub fn parse_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidParameter(format!(
                "{}: expected header {CSV_HEADER:?}, found {other:?}",
                path.display()
            )))
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidParameter(format!(
                "{} line {}: expected 7 fields, found {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            Error::InvalidParameter(format!(
                "{} line {}: unparseable {what}: {line:?}",
                path.display(),
                i + 2
            ))
        };
        records.push(ConvergenceRecord {
            eps1: fields[0].parse().map_err(|_| bad("eps1"))?,
            eps2: fields[1].parse().map_err(|_| bad("eps2"))?,
            p: fields[2].parse().map_err(|_| bad("p"))?,
            dof: fields[3].parse().map_err(|_| bad("dof"))?,
            rel_err_pct: fields[4].parse().map_err(|_| bad("rel_err_pct"))?,
            wall_time_s: fields[5].parse().map_err(|_| bad("wall_time_s"))?,
            regime: fields[6].parse()?,
        });
    }
    Ok(records)
}

/// Group records by their (eps1, eps2) bits, preserving first-appearance
/// order. Convenience for turning a flat sweep result into SVG groups.
pub fn group_by_pair(records: &[ConvergenceRecord]) -> Vec<Vec<ConvergenceRecord>> {
    let mut keys: Vec<(u64, u64)> = Vec::new();
    let mut groups: Vec<Vec<ConvergenceRecord>> = Vec::new();
    for r in records {
        let key = (r.eps1.to_bits(), r.eps2.to_bits());
        match keys.iter().position(|&k| k == key) {
            Some(i) => groups[i].push(r.clone()),
            None => {
                keys.push(key);
                groups.push(vec![r.clone()]);
            }
        }
    }
    groups
}

const SVG_WIDTH: f64 = 960.0;
const SVG_HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 220.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Round a step up to the nearest 1/2/5 times a power of ten.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Semilog plot: one polyline per group, x = DOF (linear), y = log10 of the
/// relative error. Groups whose rows all have non-positive or non-finite
/// errors are skipped with a warning on stderr. Output contains no
/// timestamps or environment data, so a fixed input yields fixed bytes.
pub fn emit_svg_semilog(groups: &[Vec<ConvergenceRecord>], title: &str, path: &Path) -> Result<()> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter(
            "semilog plot needs at least one record group".into(),
        ));
    }
    struct Series {
        label: String,
        points: Vec<(f64, f64)>, // (dof, log10 err)
    }
    let mut series = Vec::new();
    for group in groups {
        let points: Vec<(f64, f64)> = group
            .iter()
            .filter(|r| r.rel_err_pct.is_finite() && r.rel_err_pct > 0.0)
            .map(|r| (r.dof as f64, r.rel_err_pct.log10()))
            .collect();
        if points.is_empty() {
            let label = group
                .first()
                .map(|r| format!("({:e}, {:e})", r.eps1, r.eps2))
                .unwrap_or_else(|| "empty".into());
            eprintln!("warning: skipping plot group {label}: no positive errors");
            continue;
        }
        let r = &group[0];
        series.push(Series {
            label: format!("eps1={:e}, eps2={:e}", r.eps1, r.eps2),
            points,
        });
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + SVG_WIDTH - MARGIN_RIGHT) / 2.0,
        title
    );

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    if !series.is_empty() {
        let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in ys {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
        if x_lo == x_hi {
            x_lo -= 1.0;
            x_hi += 1.0;
        }
        let mut y_floor = y_lo.floor();
        let mut y_ceil = y_hi.ceil();
        if y_floor == y_ceil {
            y_floor -= 1.0;
            y_ceil += 1.0;
        }
        let to_px = |x: f64, y: f64| -> (f64, f64) {
            (
                MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w,
                MARGIN_TOP + (y_ceil - y) / (y_ceil - y_floor) * plot_h,
            )
        };

        // Decade grid lines and y tick labels.
        let decades = (y_ceil - y_floor) as i64;
        let y_step = ((decades as f64) / 10.0).ceil().max(1.0) as i64;
        let mut k = y_floor as i64;
        while k <= y_ceil as i64 {
            let (_, py) = to_px(x_lo, k as f64);
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w,
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">1e{k}</text>"#,
                MARGIN_LEFT - 8.0,
                py + 4.0
            );
            k += y_step;
        }
        // x ticks on a 1/2/5 grid.
        let x_step = nice_step((x_hi - x_lo) / 6.0);
        let mut t = (x_lo / x_step).ceil() * x_step;
        while t <= x_hi + 1e-9 {
            let (px, _) = to_px(t, y_floor);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                MARGIN_TOP,
                MARGIN_TOP + plot_h,
            );
            let _ = writeln!(
                svg,
                r#"<text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{t:.0}</text>"#,
                MARGIN_TOP + plot_h + 18.0
            );
            t += x_step;
        }

        for (i, s) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut pts = String::new();
            for &(x, y) in &s.points {
                let (px, py) = to_px(x, y);
                let _ = write!(pts, "{px:.2},{py:.2} ");
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.trim_end()
            );
            // Legend entry.
            let ly = MARGIN_TOP + 10.0 + 22.0 * i as f64;
            let lx = SVG_WIDTH - MARGIN_RIGHT + 16.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                lx + 30.0,
                ly + 4.0,
                s.label
            );
        }
    }

    // Axes on top of the grid.
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">degrees of freedom</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="22" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 22 {:.2})">relative energy error (%)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    let _ = writeln!(svg, "</svg>");

    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
