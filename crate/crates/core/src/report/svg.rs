//! Hand-written SVG charts. Output depends only on the input data, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::aggregate::{GroupImportanceMatrix, RankTable};
use crate::error::{Error, Result};

/// Series colors, assigned by group position.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PLOT_WIDTH: f64 = 720.0;

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open_svg(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + PLOT_WIDTH / 2.0,
        escape(title)
    );
}

fn legend(out: &mut String, groups: &[String], top: f64) {
    let x = MARGIN_LEFT + PLOT_WIDTH + 20.0;
    for (i, g) in groups.iter().enumerate() {
        let y = top + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect class="legend-swatch" x="{x:.2}" y="{:.2}" width="14" height="10" fill="{}"/>"#,
            y - 9.0,
            color(i)
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 20.0, escape(g));
    }
}

fn band_axis(out: &mut String, num_bands: usize, bottom: f64, x_of: impl Fn(usize) -> f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="black"/>"#,
        MARGIN_LEFT + PLOT_WIDTH
    );
    for b in 0..num_bands {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{b}</text>"#,
            x_of(b),
            bottom + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">frequency band</text>"#,
        MARGIN_LEFT + PLOT_WIDTH / 2.0,
        bottom + 38.0
    );
}

/// Line per group: x is the band, y the group's rank in that band with
/// rank 1 at the top.
pub fn ranking_svg(table: &RankTable) -> String {
    let e = table.groups.len();
    let plot_height = (40.0 * e.saturating_sub(1) as f64).max(160.0);
    let width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT;
    let height = MARGIN_TOP + plot_height + MARGIN_BOTTOM;
    let x_of = |b: usize| {
        if table.num_bands <= 1 {
            MARGIN_LEFT + PLOT_WIDTH / 2.0
        } else {
            MARGIN_LEFT + PLOT_WIDTH * b as f64 / (table.num_bands - 1) as f64
        }
    };
    let y_of = |rank: usize| {
        if e <= 1 {
            MARGIN_TOP
        } else {
            MARGIN_TOP + plot_height * (rank - 1) as f64 / (e - 1) as f64
        }
    };

    let mut out = String::new();
    open_svg(&mut out, width, height, "Relative frequency ranking");
    for rank in 1..=e {
        let y = y_of(rank);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + PLOT_WIDTH
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{rank}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">rank</text>"#,
        MARGIN_TOP + plot_height / 2.0,
        MARGIN_TOP + plot_height / 2.0
    );
    band_axis(&mut out, table.num_bands, MARGIN_TOP + plot_height + 10.0, x_of);

    for (i, (group, ranks)) in table.groups.iter().zip(&table.ranks).enumerate() {
        let points: Vec<String> = ranks
            .iter()
            .enumerate()
            .map(|(b, &r)| format!("{:.2},{:.2}", x_of(b), y_of(r)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="rank-line" data-group="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            escape(group),
            color(i),
            points.join(" ")
        );
    }
    legend(&mut out, &table.groups, MARGIN_TOP + 10.0);
    out.push_str("</svg>\n");
    out
}

pub fn render_ranking_svg(table: &RankTable, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &ranking_svg(table))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionOptions {
    /// Draw ±1 standard deviation whiskers on subject bars.
    pub error_bars: bool,
    /// Height of the plotting area in pixels.
    pub plot_height: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            error_bars: false,
            plot_height: 400.0,
        }
    }
}

/// Grouped bars of mean importance per band. With a baseline, each group's
/// baseline bar is drawn striped in the same slot, behind a narrower solid
/// subject bar.
pub fn distribution_svg(
    matrix: &GroupImportanceMatrix,
    baseline: Option<&GroupImportanceMatrix>,
    options: DistributionOptions,
) -> Result<String> {
    if let Some(base) = baseline {
        if base.groups != matrix.groups || base.num_bands != matrix.num_bands {
            return Err(Error::IncompatibleReport(format!(
                "baseline has groups {:?} over {} bands, subject has {:?} over {}",
                base.groups, base.num_bands, matrix.groups, matrix.num_bands
            )));
        }
    }
    let e = matrix.groups.len().max(1);
    let bands = matrix.num_bands.max(1);
    let plot_height = options.plot_height;
    let width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT;
    let height = MARGIN_TOP + plot_height + MARGIN_BOTTOM;
    let bottom = MARGIN_TOP + plot_height;

    let mut y_max = 0.0f64;
    for (g, row) in matrix.mean.iter().enumerate() {
        for (b, &m) in row.iter().enumerate() {
            let top = if options.error_bars { m + matrix.stddev[g][b] } else { m };
            y_max = y_max.max(top);
        }
    }
    if let Some(base) = baseline {
        y_max = base.mean.iter().flatten().fold(y_max, |a, &b| a.max(b));
    }
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let scale = plot_height / y_max;

    let slot = PLOT_WIDTH / bands as f64;
    let bar = slot * 0.8 / e as f64;
    let bar_x = |b: usize, g: usize| MARGIN_LEFT + slot * b as f64 + slot * 0.1 + bar * g as f64;

    let mut out = String::new();
    open_svg(&mut out, width, height, "Mean frequency importance");
    if baseline.is_some() {
        out.push_str("<defs>\n");
        for g in 0..matrix.groups.len() {
            let _ = writeln!(
                out,
                r#"<pattern id="stripes-{g}" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><rect width="6" height="6" fill="white"/><line x1="0" y1="0" x2="0" y2="6" stroke="{}" stroke-width="3"/></pattern>"#,
                color(g)
            );
        }
        out.push_str("</defs>\n");
    }

    for tick in 0..=4 {
        let v = y_max * tick as f64 / 4.0;
        let y = bottom - v * scale;
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eeeeee"/>"##,
            MARGIN_LEFT + PLOT_WIDTH
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean importance</text>"#,
        MARGIN_TOP + plot_height / 2.0,
        MARGIN_TOP + plot_height / 2.0
    );

    for (g, group) in matrix.groups.iter().enumerate() {
        let name = escape(group);
        for b in 0..matrix.num_bands {
            let x = bar_x(b, g);
            if let Some(base) = baseline {
                let h = base.mean[g][b] * scale;
                let _ = writeln!(
                    out,
                    r#"<rect class="bar baseline" data-group="{name}" data-band="{b}" x="{x:.2}" y="{:.2}" width="{bar:.2}" height="{h:.2}" fill="url(#stripes-{g})" stroke="{}" stroke-width="0.5"/>"#,
                    bottom - h,
                    color(g)
                );
            }
            let (sx, sw) = if baseline.is_some() { (x + bar * 0.2, bar * 0.6) } else { (x, bar) };
            let m = matrix.mean[g][b];
            let h = m * scale;
            let _ = writeln!(
                out,
                r#"<rect class="bar subject" data-group="{name}" data-band="{b}" x="{sx:.2}" y="{:.2}" width="{sw:.2}" height="{h:.2}" fill="{}"/>"#,
                bottom - h,
                color(g)
            );
            if options.error_bars {
                let sd = matrix.stddev[g][b];
                let cx = sx + sw / 2.0;
                let _ = writeln!(
                    out,
                    r#"<line class="errbar" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                    bottom - (m + sd) * scale,
                    bottom - (m - sd).max(0.0) * scale
                );
            }
        }
    }
    band_axis(&mut out, matrix.num_bands, bottom, |b| MARGIN_LEFT + slot * (b as f64 + 0.5));
    legend(&mut out, &matrix.groups, MARGIN_TOP + 10.0);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_distribution_svg(
    matrix: &GroupImportanceMatrix,
    baseline: Option<&GroupImportanceMatrix>,
    options: DistributionOptions,
    path: impl AsRef<Path>,
) -> Result<()> {
    write(path.as_ref(), &distribution_svg(matrix, baseline, options)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
