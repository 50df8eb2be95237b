//! Artifact writers: CSV tables, JSON documents and SVG heatmaps.
//!
//! Output is a pure function of the input values, so identical inputs give
//! byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::atlas::{CenterMap, ContourField, ContourLine, EfficiencyAtlas};
use crate::echosim::EchoResult;
use crate::error::{Error, Result};
use crate::response::{SpectralResponse, SusceptibilityProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format '{other}' (expected csv, json or svg)"))),
        }
    }
}

/// Comma-separated list such as `csv,json,svg`.
pub fn parse_formats(s: &str) -> Result<BTreeSet<Format>> {
    let set = s.split(',').filter(|p| !p.trim().is_empty()).map(Format::from_str).collect::<Result<BTreeSet<_>>>()?;
    if set.is_empty() {
        return Err(Error::Config("--format needs at least one of csv, json, svg".into()));
    }
    Ok(set)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<PathBuf> {
    let fail = |e: csv::Error| Error::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for row in rows {
        w.serialize(row).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

#[derive(Serialize)]
struct AtlasRow {
    d0: f64,
    f: f64,
    delta_qm_max: f64,
    delta0_opt: f64,
}

/// File stem shared by all formats of an atlas, e.g. `atlas_eta0.9`.
pub fn atlas_stem(atlas: &EfficiencyAtlas) -> String {
    format!("atlas_eta{}", atlas.eta_target)
}

pub fn write_atlas(atlas: &EfficiencyAtlas, dir: &Path, formats: &BTreeSet<Format>) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let stem = atlas_stem(atlas);
    let mut out = Vec::new();
    for fmt in formats {
        out.push(match fmt {
            Format::Csv => write_csv(
                &dir.join(format!("{stem}.csv")),
                atlas.cells.iter().flatten().map(|c| AtlasRow {
                    d0: c.d0,
                    f: c.f,
                    delta_qm_max: c.delta_qm_max,
                    delta0_opt: c.delta0_opt,
                }),
            )?,
            Format::Json => write_json(&dir.join(format!("{stem}.json")), atlas)?,
            Format::Svg => write_text(
                &dir.join(format!("{stem}.svg")),
                &heatmap_svg(&Heatmap {
                    title: format!("max Δqm [Δin] with optimal Δ0, η* = {}", atlas.eta_target),
                    x_label: "optical depth d0 = α0L",
                    y_label: "finesse f",
                    x: &atlas.d0_axis,
                    y: &atlas.f_axis,
                    field: &atlas.delta_qm_matrix(),
                    contours: &atlas.contours,
                }),
            )?,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct CenterRow {
    d0: f64,
    f: f64,
    eta_center: f64,
}

pub fn center_map_stem(map: &CenterMap) -> String {
    let method = serde_json::to_value(map.method).expect("method serializes");
    format!("center_map_{}", method.as_str().unwrap_or("map"))
}

pub fn write_center_map(map: &CenterMap, dir: &Path, formats: &BTreeSet<Format>) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let stem = center_map_stem(map);
    let mut out = Vec::new();
    for fmt in formats {
        out.push(match fmt {
            Format::Csv => {
                let rows = map.f_axis.iter().enumerate().flat_map(|(j, &f)| {
                    map.d0_axis.iter().enumerate().map(move |(i, &d0)| CenterRow {
                        d0,
                        f,
                        eta_center: map.eta_center[j][i],
                    })
                });
                write_csv(&dir.join(format!("{stem}.csv")), rows)?
            }
            Format::Json => write_json(&dir.join(format!("{stem}.json")), map)?,
            Format::Svg => write_text(
                &dir.join(format!("{stem}.svg")),
                &heatmap_svg(&Heatmap {
                    title: "line-centre efficiency η(0)".to_string(),
                    x_label: "optical depth d0 = α0L",
                    y_label: "finesse f",
                    x: &map.d0_axis,
                    y: &map.f_axis,
                    field: &map.eta_center,
                    contours: &map.contours,
                }),
            )?,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct ProfileRow {
    omega: f64,
    #[serde(rename = "D")]
    depth: f64,
    phi: f64,
}

pub fn write_profile(profile: &SusceptibilityProfile, path: &Path) -> Result<PathBuf> {
    let rows = (0..profile.len()).map(|i| ProfileRow {
        omega: profile.omega[i],
        depth: profile.depth[i],
        phi: profile.phase[i],
    });
    write_csv(path, rows)
}

#[derive(Serialize)]
struct ResponseRow {
    omega: f64,
    #[serde(rename = "D")]
    depth: f64,
    phi: f64,
    re_gamma: f64,
    im_gamma: f64,
    eta: f64,
}

/// Response table; `omega,D,phi,re_gamma,im_gamma,eta`.
pub fn write_response(response: &SpectralResponse, path: &Path) -> Result<PathBuf> {
    let p = &response.profile;
    let rows = (0..p.len()).map(|i| ResponseRow {
        omega: p.omega[i],
        depth: p.depth[i],
        phi: p.phase[i],
        re_gamma: response.gamma[i].re,
        im_gamma: response.gamma[i].im,
        eta: response.eta[i],
    });
    write_csv(path, rows)
}

#[derive(Serialize)]
struct EchoRow {
    t: f64,
    re: f64,
    im: f64,
    abs2: f64,
}

/// Echo table; `t,re,im,abs2`.
pub fn write_echo(echo: &EchoResult, path: &Path) -> Result<PathBuf> {
    let rows = echo.time.iter().zip(&echo.amplitude).map(|(&t, a)| EchoRow {
        t,
        re: a.re,
        im: a.im,
        abs2: a.norm_sqr(),
    });
    write_csv(path, rows)
}

struct Heatmap<'a> {
    title: String,
    x_label: &'a str,
    y_label: &'a str,
    x: &'a [f64],
    y: &'a [f64],
    /// `field[j][i]` at `(x[i], y[j])`.
    field: &'a [Vec<f64>],
    contours: &'a [ContourLine],
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 50.0;
const PLOT_W: f64 = 560.0;
const PLOT_H: f64 = 400.0;

/// Viridis-like ramp through five anchor colours.
fn colour(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let u = s - k as f64;
    let c: Vec<u8> = (0..3).map(|m| (STOPS[k][m] + u * (STOPS[k + 1][m] - STOPS[k][m])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Cell half-width along an axis (1 for a single-point axis).
fn half_step(axis: &[f64]) -> f64 {
    if axis.len() > 1 {
        0.5 * (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    } else {
        0.5
    }
}

fn heatmap_svg(h: &Heatmap) -> String {
    let (hx, hy) = (half_step(h.x), half_step(h.y));
    let (x0, x1) = (h.x[0] - hx, h.x[h.x.len() - 1] + hx);
    let (y0, y1) = (h.y[0] - hy, h.y[h.y.len() - 1] + hy);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * PLOT_W;
    let py = |y: f64| TOP + PLOT_H - (y - y0) / (y1 - y0) * PLOT_H;

    let values = h.field.iter().flatten().copied().filter(|v| v.is_finite());
    let vmax = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let vmin = values.fold(f64::INFINITY, f64::min).min(0.0);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(&h.title)
    );

    s.push_str("<g id=\"cells\" shape-rendering=\"crispEdges\">\n");
    for (j, row) in h.field.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let (xa, xb) = (px(h.x[i] - hx), px(h.x[i] + hx));
            let (ya, yb) = (py(h.y[j] + hy), py(h.y[j] - hy));
            let _ = writeln!(
                s,
                r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                xb - xa,
                yb - ya,
                colour((v - vmin) / span)
            );
        }
    }
    s.push_str("</g>\n<g id=\"contours\" fill=\"none\" stroke-width=\"1.5\">\n");
    for c in h.contours {
        let (stroke, dash, name) = match c.field {
            ContourField::DeltaQm => ("black", "", "delta_qm"),
            ContourField::Delta0 => ("red", r#" stroke-dasharray="5,3""#, "delta0"),
            ContourField::EtaCenter => ("black", "", "eta"),
        };
        let mut d = String::new();
        for (k, p) in c.points.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, px(p[0]), py(p[1]));
        }
        if c.closed {
            d.push_str(" Z");
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" stroke="{stroke}"{dash} data-field="{name}" data-level="{}"><title>{name} = {}</title></path>"#,
            c.level, c.level
        );
    }
    s.push_str("</g>\n");

    // Frame, ticks and labels.
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );
    for &v in ticks(h.x).iter() {
        let x = px(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{v}</text>"#,
            TOP + PLOT_H,
            TOP + PLOT_H + 5.0,
            TOP + PLOT_H + 19.0
        );
    }
    for &v in ticks(h.y).iter() {
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 40.0,
        escape(h.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(25 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + PLOT_H / 2.0,
        escape(h.y_label)
    );

    // Colour bar.
    let bar_x = LEFT + PLOT_W + 25.0;
    let steps = 50;
    for k in 0..steps {
        let h_step = PLOT_H / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x:.1}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            TOP + PLOT_H - (k + 1) as f64 * h_step,
            h_step + 0.5,
            colour((k as f64 + 0.5) / steps as f64)
        );
    }
    for (frac, v) in [(0.0, vmin), (0.5, vmin + 0.5 * span), (1.0, vmin + span)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}">{:.3}</text>"#,
            bar_x + 22.0,
            TOP + PLOT_H - frac * PLOT_H + 4.0,
            v
        );
    }
    s.push_str("</svg>\n");
    s
}

/// About six evenly spaced axis values for tick marks.
fn ticks(axis: &[f64]) -> Vec<f64> {
    let every = axis.len().div_ceil(6).max(1);
    axis.iter().copied().step_by(every).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        let f = parse_formats("svg,csv").unwrap();
        assert_eq!(f.into_iter().collect::<Vec<_>>(), vec![Format::Csv, Format::Svg]);
        assert!(parse_formats("png").is_err());
        assert!(parse_formats("").is_err());
    }

    #[test]
    fn colour_ramp_endpoints() {
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
        assert_eq!(colour(f64::NAN), "#440154");
    }
}
