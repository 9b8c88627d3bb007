//! Result tables (CSV and JSON) and the logarithmic SVG plot.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{McConfig, McEstimate};
use crate::error::Result;
use crate::oracle::QuadratureResult;
use crate::overlap::Family;
use crate::samplers::SamplerKind;

/// One result row. Column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub family: Family,
    pub n: usize,
    pub sampler: SamplerKind,
    pub samples: u64,
    pub packages: usize,
    pub seed: u64,
    pub mean: f64,
    pub err_lo: f64,
    pub err_hi: f64,
    pub std_error: f64,
    pub norm_mean: f64,
    pub reliable: bool,
    pub oracle_value: Option<f64>,
    pub oracle_delta: Option<f64>,
    pub wall_time_s: Option<f64>,
}

impl ResultRow {
    pub fn new(
        family: Family,
        n: usize,
        config: &McConfig,
        estimate: &McEstimate,
        oracle: Option<QuadratureResult>,
        with_timing: bool,
    ) -> Self {
        Self {
            family,
            n,
            sampler: config.sampler,
            samples: estimate.samples_used,
            packages: config.packages,
            seed: config.root_seed,
            mean: estimate.mean,
            err_lo: estimate.package_min,
            err_hi: estimate.package_max,
            std_error: estimate.std_error,
            norm_mean: estimate.norm_mean,
            reliable: estimate.reliable,
            oracle_value: oracle.map(|q| q.value),
            oracle_delta: oracle.map(|q| q.refinement_delta),
            wall_time_s: with_timing.then_some(estimate.wall_time_seconds),
        }
    }
}

pub fn write_csv<W: io::Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

pub fn json_string(rows: &[ResultRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn colour(family: Family) -> &'static str {
    match family {
        Family::NN => "#1f4e9c",
        Family::NVac => "#b8432f",
        Family::VacN => "#2f8a4a",
    }
}

/// Logarithmic plot of overlap and norm against `n`, with min/max bars.
///
/// Overlaps of n-vs-n are drawn as boxes, n-vs-vacuum and vacuum-vs-n as
/// triangles; the norm checks are hollow markers near `10^0`.
pub fn render_svg(rows: &[ResultRow], title: &str) -> String {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let mut lo = f64::INFINITY;
    let mut n_max = 1usize;
    let mut n_min = usize::MAX;
    for r in rows {
        for v in [r.mean, r.err_lo] {
            if positive(v) {
                lo = lo.min(v);
            }
        }
        n_max = n_max.max(r.n);
        n_min = n_min.min(r.n);
    }
    if !lo.is_finite() {
        lo = 1e-6;
    }
    if n_min == usize::MAX {
        n_min = 0;
    }
    let y_lo = lo.log10().floor();
    let y_hi = 0.5;
    let x_lo = n_min.saturating_sub(1) as f64;
    let x_hi = (n_max + 1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |n: f64| LEFT + (n - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |v: f64| TOP + (y_hi - v.log10()) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let mut decade = y_lo as i32;
    while decade as f64 <= y_hi {
        let y = py(10f64.powi(decade));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    let tick_step = ((x_hi - x_lo) / 10.0).ceil().max(1.0) as usize;
    let mut n = x_lo.ceil() as usize;
    while (n as f64) <= x_hi {
        let x = px(n as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
        n += tick_step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">particle number n</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">overlap / norm (log scale)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut groups: Vec<(Family, SamplerKind)> = rows.iter().map(|r| (r.family, r.sampler)).collect();
    groups.sort();
    groups.dedup();
    for (gi, &(family, sampler)) in groups.iter().enumerate() {
        let c = colour(family);
        let dash = if sampler == SamplerKind::Spherical { r#" stroke-dasharray="4 3""# } else { "" };
        let filled = sampler == SamplerKind::Spherical;
        let members: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.family == family && r.sampler == sampler)
            .collect();
        let overlap: Vec<String> = members
            .iter()
            .filter(|r| positive(r.mean))
            .map(|r| format!("{:.2},{:.2}", px(r.n as f64), py(r.mean)))
            .collect();
        if overlap.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{c}"{dash}/>"#,
                overlap.join(" ")
            );
        }
        let norm: Vec<String> = members
            .iter()
            .filter(|r| positive(r.norm_mean))
            .map(|r| format!("{:.2},{:.2}", px(r.n as f64), py(r.norm_mean)))
            .collect();
        if norm.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{c}" stroke-opacity="0.5"{dash}/>"#,
                norm.join(" ")
            );
        }
        for r in &members {
            let x = px(r.n as f64);
            if positive(r.mean) {
                let y = py(r.mean);
                let top = py(r.err_hi.max(r.mean));
                let bottom = if positive(r.err_lo) { py(r.err_lo) } else { TOP + plot_h };
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="{c}"/>"#
                );
                let fill = if filled { c } else { "white" };
                let _ = writeln!(s, "{}", marker(family, x, y, c, fill));
            }
            if positive(r.norm_mean) {
                let _ = writeln!(s, "{}", marker(family, x, py(r.norm_mean), c, "none"));
            }
        }
        let ly = TOP + 16.0 + 20.0 * gi as f64;
        let lx = LEFT + plot_w + 16.0;
        let label = match family {
            Family::NN => "n-n",
            Family::NVac => "n-0",
            Family::VacN => "0-n",
        };
        let _ = writeln!(
            s,
            r#"{}<text x="{:.2}" y="{:.2}">{label} ({sampler})</text>"#,
            marker(family, lx, ly - 4.0, c, if filled { c } else { "white" }),
            lx + 12.0,
            ly
        );
    }
    s.push_str("</svg>\n");
    s
}

fn marker(family: Family, x: f64, y: f64, stroke: &str, fill: &str) -> String {
    match family {
        Family::NN => format!(
            r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" stroke="{stroke}" fill="{fill}"/>"#,
            x - 3.5,
            y - 3.5
        ),
        Family::NVac | Family::VacN => format!(
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" stroke="{stroke}" fill="{fill}"/>"#,
            x,
            y - 4.5,
            x - 4.5,
            y + 3.5,
            x + 4.5,
            y + 3.5
        ),
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
