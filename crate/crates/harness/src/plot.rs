//! Static SVG line plots of mean total error with ±1 standard error bands.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use bop_elites::solvers::SolverKind;

use crate::error::{io, HarnessError, Result};
use crate::results::SummaryRow;

/// Values below this are drawn at this height on the log axis.
pub const LOG_FLOOR: f64 = 1e-6;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

fn colour(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::BopElites => "#1b6ac9",
        SolverKind::Sequential => "#d9480f",
        SolverKind::Independent => "#2b8a3e",
    }
}

struct Axes {
    x_range: (f64, f64),
    y_range: (f64, f64),
    scale: Scale,
}

impl Axes {
    fn px(&self, iteration: f64) -> f64 {
        let (lo, hi) = self.x_range;
        let t = if hi > lo {
            (iteration - lo) / (hi - lo)
        } else {
            0.5
        };
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn transform(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log => v.max(LOG_FLOOR).log10(),
        }
    }

    /// SVG y grows downwards, so larger values map to smaller coordinates.
    fn py(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        let t = (self.transform(v) - lo) / (hi - lo);
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }
}

fn points(pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.0e}")
    }
}

/// Renders one plot: a mean line and a shaded ±SE band per solver.
pub fn render_svg(summary: &[SummaryRow], scale: Scale) -> Result<String> {
    if summary.is_empty() {
        return Err(HarnessError::Invalid("cannot plot an empty summary".into()));
    }
    let mut series: BTreeMap<SolverKind, Vec<SummaryRow>> = BTreeMap::new();
    for r in summary {
        series.entry(r.solver).or_default().push(*r);
    }
    for s in series.values_mut() {
        s.sort_by_key(|r| r.iteration);
    }

    let x_lo = summary.iter().map(|r| r.iteration).min().unwrap() as f64;
    let x_hi = summary.iter().map(|r| r.iteration).max().unwrap() as f64;
    let top = summary
        .iter()
        .map(|r| r.mean_te + r.stderr_te)
        .fold(0.0, f64::max);
    let y_range = match scale {
        Scale::Linear => (0.0, if top > 0.0 { top * 1.05 } else { 1.0 }),
        Scale::Log => {
            let low = summary
                .iter()
                .map(|r| (r.mean_te - r.stderr_te).max(LOG_FLOOR))
                .fold(f64::INFINITY, f64::min);
            let lo = low.log10().floor();
            let hi = top.max(LOG_FLOOR).log10().ceil();
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
    };
    let axes = Axes {
        x_range: (x_lo, x_hi),
        y_range,
        scale,
    };

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();

    // Axes, ticks and labels.
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    writeln!(
        w,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    )
    .unwrap();
    let x_step = ((x_hi - x_lo) / 8.0).ceil().max(1.0);
    let mut it = x_lo;
    while it <= x_hi {
        let x = axes.px(it);
        writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 4.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{it}</text>"#,
            y0 + 18.0
        )
        .unwrap();
        it += x_step;
    }
    let y_ticks: Vec<f64> = match scale {
        Scale::Linear => (0..=5)
            .map(|k| y_range.0 + (y_range.1 - y_range.0) * k as f64 / 5.0)
            .collect(),
        Scale::Log => {
            let step = ((y_range.1 - y_range.0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut e = y_range.0;
            while e <= y_range.1 {
                v.push(10f64.powf(e));
                e += step;
            }
            v
        }
    };
    for v in y_ticks {
        let y = axes.py(v);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 4.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 7.0,
            y + 4.0,
            tick_label(v)
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    let y_label = match scale {
        Scale::Linear => "mean total error",
        Scale::Log => "mean total error (log)",
    };
    writeln!(w, r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{y_label}</text>"#, (y0 + y1) / 2.0).unwrap();

    for (k, (kind, rows)) in series.iter().enumerate() {
        let c = colour(*kind);
        let upper = rows.iter().map(|r| {
            (
                axes.px(r.iteration as f64),
                axes.py(r.mean_te + r.stderr_te),
            )
        });
        let lower = rows.iter().rev().map(|r| {
            (
                axes.px(r.iteration as f64),
                axes.py((r.mean_te - r.stderr_te).max(0.0)),
            )
        });
        writeln!(
            w,
            r#"<polygon class="band" points="{}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#,
            points(upper.chain(lower))
        )
        .unwrap();
        let mean = rows
            .iter()
            .map(|r| (axes.px(r.iteration as f64), axes.py(r.mean_te)));
        writeln!(w, r#"<polyline class="mean" data-solver="{kind}" points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, points(mean)).unwrap();
        let ly = TOP + 10.0 + 20.0 * k as f64;
        writeln!(
            w,
            r#"<rect x="{:.2}" y="{:.2}" width="14" height="3" fill="{c}"/>"#,
            x1 + 15.0,
            ly - 4.0
        )
        .unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{ly:.2}">{kind}</text>"#, x1 + 35.0).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `te_linear.svg` and `te_log.svg` into `dir`.
pub fn emit_plots(summary: &[SummaryRow], dir: &Path) -> Result<[PathBuf; 2]> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let linear = dir.join("te_linear.svg");
    let log = dir.join("te_log.svg");
    fs::write(&linear, render_svg(summary, Scale::Linear)?).map_err(io(&linear))?;
    fs::write(&log, render_svg(summary, Scale::Log)?).map_err(io(&log))?;
    Ok([linear, log])
}
