//! Standalone SVG line and scatter plots.
//!
//! Each series keeps its raw data in `data-x` / `data-y` attributes so a plot
//! can be checked against the CSV it was drawn from. Output is a pure
//! function of the input.

use std::fmt::Write;

use crate::error::{CliError, CliResult};
use crate::manifest::fmt_f64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            mark: Mark::Line,
            points,
        }
    }

    pub fn points(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            mark: Mark::Points,
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    pub fn render(&self) -> CliResult<String> {
        let finite: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        if finite.is_empty() {
            return Err(CliError::Invalid(format!(
                "plot {:?}: no finite points",
                self.title
            )));
        }
        let x_range = padded_range(finite.iter().map(|p| p.0));
        let y_range = padded_range(finite.iter().map(|p| p.1));
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x - x_range.0) / (x_range.1 - x_range.0) * pw;
        let sy = |y: f64| TOP + ph - (y - y_range.0) / (y_range.1 - y_range.0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x_range) {
            let x = px(sx(t));
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(t)
            );
        }
        for t in ticks(y_range) {
            let y = px(sy(t));
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            let data_x = join(pts.iter().map(|p| p.0));
            let data_y = join(pts.iter().map(|p| p.1));
            let name = escape(&series.name);
            match series.mark {
                Mark::Line => {
                    let coords: Vec<String> = pts
                        .iter()
                        .map(|&(x, y)| format!("{},{}", px(sx(x)), px(sy(y))))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline class="series" data-name="{name}" data-x="{data_x}" data-y="{data_y}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                        coords.join(" ")
                    );
                }
                Mark::Points => {
                    let _ = writeln!(
                        s,
                        r#"<g class="series" data-name="{name}" data-x="{data_x}" data-y="{data_y}" fill="{color}" fill-opacity="0.7">"#
                    );
                    for &(x, y) in &pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{}" cy="{}" r="3"/>"#,
                            px(sx(x)),
                            px(sy(y))
                        );
                    }
                    s.push_str("</g>\n");
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}" dominant-baseline="middle">{name}</text>"#,
                ly - 6.0,
                lx + 18.0,
                ly
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Five evenly spaced ticks across the range.
fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn join(xs: impl Iterator<Item = f64>) -> String {
    xs.map(fmt_f64).collect::<Vec<_>>().join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Values of a `data-x` / `data-y` attribute for each series, in order.
pub fn series_data(svg: &str, attr: &str) -> Vec<Vec<f64>> {
    let key = format!(r#"{attr}=""#);
    svg.lines()
        .filter(|l| l.contains(r#"class="series""#))
        .filter_map(|l| {
            let start = l.find(&key)? + key.len();
            let end = start + l[start..].find('"')?;
            Some(
                l[start..end]
                    .split_whitespace()
                    .map(|v| v.parse().expect("numeric data attribute"))
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_line_has_one_polyline() {
        let svg = Plot::new("t", "x", "y")
            .with(Series::line("a", vec![(0.0, 0.0), (1.0, 1.0)]))
            .render()
            .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn deterministic_bytes() {
        let plot = Plot::new("a < b", "x", "y")
            .with(Series::points("p", vec![(0.1, 0.2), (0.3, -4.0)]))
            .with(Series::line("l", vec![(1.0, 2.0), (2.0, 3.0), (3.0, 1.0)]));
        assert_eq!(plot.render().unwrap(), plot.render().unwrap());
        assert!(plot.render().unwrap().contains("a &lt; b"));
    }

    #[test]
    fn empty_plot_is_an_error() {
        assert!(Plot::new("t", "x", "y").render().is_err());
        let only_nan = Plot::new("t", "x", "y").with(Series::line("a", vec![(f64::NAN, 1.0)]));
        assert!(only_nan.render().is_err());
    }

    #[test]
    fn data_attributes_parse_back() {
        let pts = vec![(0.05, 0.5), (0.15, 2.0 / 3.0), (1.25, 0.9)];
        let svg = Plot::new("t", "x", "y")
            .with(Series::line("a", pts.clone()))
            .render()
            .unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        assert_eq!(series_data(&svg, "data-x"), vec![xs]);
        assert_eq!(series_data(&svg, "data-y"), vec![ys]);
    }

    #[test]
    fn constant_series_gets_a_unit_range() {
        let svg = Plot::new("t", "x", "y")
            .with(Series::line("a", vec![(1.0, 2.0), (1.0, 2.0)]))
            .render()
            .unwrap();
        assert!(!svg.contains("NaN"));
    }
}
