//! Self-contained SVG line charts of experiment CSVs.
//!
//! One polyline per learner, x = examples seen, y = the chosen metric averaged
//! over seeds (synthetic) or digits (MNIST). Output depends only on the CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{MNIST_COLUMNS, SYNTHETIC_COLUMNS};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotSpec {
    /// Column to plot; defaults to `approx_error` (synthetic) or `ova_error` (MNIST).
    pub metric: Option<String>,
    pub title: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Schema {
    Synthetic,
    Mnist,
}

impl Schema {
    fn detect(header: &csv::StringRecord) -> Result<Schema> {
        let cols: Vec<&str> = header.iter().collect();
        if cols == SYNTHETIC_COLUMNS {
            Ok(Schema::Synthetic)
        } else if cols == MNIST_COLUMNS {
            Ok(Schema::Mnist)
        } else {
            Err(Error::UnknownSchema {
                expected: format!(
                    "[{}] or [{}]",
                    SYNTHETIC_COLUMNS.join(", "),
                    MNIST_COLUMNS.join(", ")
                ),
            })
        }
    }

    fn default_metric(self) -> &'static str {
        match self {
            Schema::Synthetic => "approx_error",
            Schema::Mnist => "ova_error",
        }
    }

    fn metrics(self) -> &'static [&'static str] {
        match self {
            Schema::Synthetic => &["approx_error"],
            Schema::Mnist => &["test_error", "approx_error", "ova_error"],
        }
    }
}

struct Series {
    label: String,
    /// x -> (sum, count)
    points: BTreeMap<u64, (f64, usize)>,
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    rec.get(idx)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format {
            offset: line,
            message: format!(
                "unparseable value {:?} in column {}",
                rec.get(idx).unwrap_or(""),
                idx + 1
            ),
        })
}

fn collect_series<R: Read>(r: R, spec: &PlotSpec) -> Result<(Schema, String, Vec<Series>)> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    let schema = Schema::detect(&header)?;
    let metric = spec
        .metric
        .as_deref()
        .unwrap_or(schema.default_metric())
        .to_string();
    if !schema.metrics().contains(&metric.as_str()) {
        return Err(Error::InvalidConfig(format!(
            "metric {metric:?} not available; choose one of {:?}",
            schema.metrics()
        )));
    }
    let y_idx = header
        .iter()
        .position(|c| c == metric)
        .expect("metric is a schema column");
    let mut series: Vec<Series> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let x: u64 = parse_field(&rec, 0, line)?;
        let y: f64 = parse_field(&rec, y_idx, line)?;
        let label = match schema {
            Schema::Synthetic => match (&rec[2], &rec[3]) {
                ("", "") => rec[1].to_string(),
                (k, c) => format!("{} K={k} {c}", &rec[1]),
            },
            Schema::Mnist => rec[1].to_string(),
        };
        let s = match series.iter_mut().position(|s| s.label == label) {
            Some(p) => &mut series[p],
            None => {
                series.push(Series {
                    label,
                    points: BTreeMap::new(),
                });
                series.last_mut().expect("just pushed")
            }
        };
        let cell = s.points.entry(x).or_insert((0.0, 0));
        cell.0 += y;
        cell.1 += 1;
    }
    if series.is_empty() {
        return Err(Error::InvalidInput(
            "CSV has no data rows; nothing to plot".into(),
        ));
    }
    Ok((schema, metric, series))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the CSV read from `r` as an SVG document.
pub fn render_svg<R: Read>(r: R, spec: &PlotSpec) -> Result<String> {
    let (schema, metric, series) = collect_series(r, spec)?;
    let means: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|(&x, &(sum, n))| (x as f64, sum / n as f64))
                .collect()
        })
        .collect();
    let all = means.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let x_label = match schema {
        Schema::Synthetic => "example_index",
        Schema::Mnist => "examples_seen",
    };
    let title = spec
        .title
        .clone()
        .unwrap_or_else(|| format!("{metric} vs {x_label}"));

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&title)
    );
    let _ = writeln!(
        w,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}"/></g>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        TOP + ph
    );
    for t in 0..=5 {
        let f = f64::from(t) / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 18.0,
            xv.round()
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&metric)
    );
    for (i, pts) in means.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            w,
            r#"<g class="legend"><line x1="{x}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Reads `csv_path` and writes the chart to `out_path`.
pub fn emit_plot(csv_path: &Path, out_path: &Path, spec: &PlotSpec) -> Result<()> {
    let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let svg = render_svg(file, spec)
        .map_err(|e| e.context(format!("plotting {}", csv_path.display())))?;
    std::fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}
