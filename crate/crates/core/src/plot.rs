//! Minimal standalone SVG charts.
//!
//! Every chart is written together with a sibling CSV (`series,x,y`) holding
//! exactly the plotted data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlotStyle {
    #[default]
    Line,
    Scatter,
}

impl std::str::FromStr for PlotStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(PlotStyle::Line),
            "scatter" => Ok(PlotStyle::Scatter),
            other => Err(Error::InvalidInput(format!("unknown plot style '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: PlotStyle,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>, style: PlotStyle) -> Series {
        Series { name: name.into(), x, y, style }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
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

fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let step = nice_step(hi - lo, 5);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    (start, end, (0..=n).map(|i| start + i as f64 * step).collect())
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn validate(spec: &PlotSpec) -> Result<()> {
    if spec.series.is_empty() {
        return Err(Error::data("nothing to plot"));
    }
    for s in &spec.series {
        if s.x.len() != s.y.len() {
            return Err(Error::data(format!("series '{}' has mismatched x and y lengths", s.name)));
        }
        if s.x.len() < 2 {
            return Err(Error::data(format!("series '{}' needs at least two points", s.name)));
        }
        if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
            return Err(Error::data(format!("series '{}' has non-finite values", s.name)));
        }
    }
    Ok(())
}

/// Render the chart as SVG text.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    validate(spec)?;
    let all_x = spec.series.iter().flat_map(|s| s.x.iter().copied());
    let all_y = spec.series.iter().flat_map(|s| s.y.iter().copied());
    let (mut x0, mut x1) = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (x0, x1, xt) = ticks(x0, x1);
    let (y0, y1, yt) = ticks(y0, y1);
    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !spec.title.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&spec.title));
    }
    // axes
    let _ = writeln!(svg, r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, mt + ph, ml + pw, mt + ph);
    let _ = writeln!(svg, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#, mt + ph);
    for &t in &xt {
        let x = sx(t);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, mt + ph, mt + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, mt + ph + 18.0, fmt_tick(t));
    }
    for &t in &yt {
        let y = sy(t);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, HEIGHT - 12.0, escape(&spec.x_label));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        mt + ph / 2.0,
        escape(&spec.y_label)
    );

    for (k, s) in spec.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        match s.style {
            PlotStyle::Line => {
                let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            PlotStyle::Scatter => {
                for (&x, &y) in s.x.iter().zip(&s.y) {
                    let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
        }
        // legend entry
        let ly = mt + 10.0 + 16.0 * k as f64;
        let lx = ml + pw - 150.0;
        match s.style {
            PlotStyle::Line => {
                let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>"#, lx + 20.0);
            }
            PlotStyle::Scatter => {
                let _ = writeln!(svg, r#"<circle cx="{}" cy="{ly}" r="2.5" fill="{color}"/>"#, lx + 10.0);
            }
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_plot_csv<W: std::io::Write>(spec: &PlotSpec, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "x", "y"])?;
    for s in &spec.series {
        for (x, y) in s.x.iter().zip(&s.y) {
            w.write_record([s.name.clone(), x.to_string(), y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `out` (SVG) and its sibling `.csv`; returns the CSV path.
pub fn emit_plot(spec: &PlotSpec, out: impl AsRef<Path>) -> Result<PathBuf> {
    let out = out.as_ref();
    let svg = render_svg(spec)?;
    fs::write(out, svg)?;
    let csv_path = out.with_extension("csv");
    write_plot_csv(spec, fs::File::create(&csv_path)?)?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(style: PlotStyle) -> PlotSpec {
        PlotSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::new("s", vec![0.0, 1.0], vec![2.0, 3.0], style)],
        }
    }

    #[test]
    fn two_point_line_has_one_polyline() {
        let svg = render_svg(&spec(PlotStyle::Line)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn scatter_has_no_polyline() {
        let svg = render_svg(&spec(PlotStyle::Scatter)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_is_data_error() {
        assert!(matches!(render_svg(&PlotSpec::default()), Err(Error::Data { .. })));
        let mut s = spec(PlotStyle::Line);
        s.series[0].x.pop();
        s.series[0].y.pop();
        assert!(render_svg(&s).is_err());
    }

    #[test]
    fn sibling_csv_written() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = emit_plot(&spec(PlotStyle::Line), dir.path().join("fig.svg")).unwrap();
        let text = fs::read_to_string(csv_path).unwrap();
        assert_eq!(text, "series,x,y\ns,0,2\ns,1,3\n");
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(nice_step(10.0, 5), 2.0);
        assert_eq!(nice_step(0.7, 5), 0.2);
        let (lo, hi, t) = ticks(0.13, 0.97);
        assert!(lo <= 0.13 && hi >= 0.97 && t.len() >= 3);
    }
}
