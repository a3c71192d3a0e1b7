//! CSV, JSON and SVG writers. All output is deterministic: floats use the
//! shortest round-trip decimal form and no clock is read unless asked for.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map};

use crate::contour::{ContourResult, Grid};
use crate::error::{CliError, CliResult};
use crate::sweep::{Table, Value};

/// Shortest round-trip decimal; `nan`, `inf`, `-inf` for the specials.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Num(x) => format_float(*x),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
    }
}

pub fn to_csv(table: &Table) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Numerical(format!("CSV encoding: {e}"));
    w.write_record(&table.columns).map_err(fail)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text)).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Numerical(format!("CSV encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells is UTF-8"))
}

/// Run description stored under `meta`.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    pub command: String,
    pub extra: Map<String, serde_json::Value>,
    /// Seconds since the Unix epoch; only set on request.
    pub timestamp: Option<u64>,
}

impl Meta {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable meta"));
        self
    }

    pub fn stamped(mut self, on: bool) -> Self {
        if on {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            self.timestamp = Some(now);
        }
        self
    }

    fn to_json(&self) -> serde_json::Value {
        let mut m = Map::new();
        m.insert("artifact".into(), json!("optobell"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        if let Some(t) = self.timestamp {
            m.insert("timestamp".into(), json!(t));
        }
        serde_json::Value::Object(m)
    }
}

/// `{config, records, meta}` with one object per row; non-finite numbers
/// become `null`.
pub fn to_json(config: &impl Serialize, table: &Table, meta: &Meta) -> CliResult<String> {
    let records: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for (c, v) in table.columns.iter().zip(row) {
                let jv = match v {
                    Value::Num(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
                    Value::Bool(b) => json!(b),
                    Value::Text(s) => json!(s),
                };
                m.insert(c.clone(), jv);
            }
            serde_json::Value::Object(m)
        })
        .collect();
    let doc = json!({
        "config": serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
        "records": records,
        "meta": meta.to_json(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    Ok(text)
}

/// A labelled contour drawn over the heatmap.
pub struct Overlay<'a> {
    pub label: String,
    pub contour: &'a ContourResult,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const STROKES: [&str; 6] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

fn color(t: f64) -> String {
    if !t.is_finite() {
        return "#808080".to_string();
    }
    let t = t.clamp(0.0, 1.0);
    // dark blue through white to dark red
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (40.0 + 215.0 * s, 60.0 + 195.0 * s, 160.0 + 95.0 * s)
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0 - 75.0 * s, 255.0 - 215.0 * s, 255.0 - 215.0 * s)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Static SVG: one `<rect>` per grid point (when `heat` is given) and one
/// `<path>` per contour polyline. `bounds` fixes the plotted window.
pub fn to_svg(
    bounds: (f64, f64, f64, f64),
    heat: Option<(&Grid, f64, f64)>,
    overlays: &[Overlay<'_>],
    labels: (&str, &str),
) -> String {
    let (x0, x1, y0, y1) = bounds;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n");
    if let Some((grid, vmin, vmax)) = heat {
        out.push_str("<g shape-rendering=\"crispEdges\">\n");
        let half = |v: &[f64], k: usize| {
            let lo = if k == 0 { v[0] } else { 0.5 * (v[k - 1] + v[k]) };
            let hi = if k + 1 == v.len() {
                v[k]
            } else {
                0.5 * (v[k] + v[k + 1])
            };
            (lo, hi)
        };
        for i in 0..grid.xs.len() {
            let (xa, xb) = half(&grid.xs, i);
            for j in 0..grid.ys.len() {
                let (ya, yb) = half(&grid.ys, j);
                let t = (grid.at(i, j) - vmin) / (vmax - vmin);
                out.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                    sx(xa),
                    sy(yb),
                    sx(xb) - sx(xa),
                    sy(ya) - sy(yb),
                    color(t)
                ));
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    for (k, ov) in overlays.iter().enumerate() {
        let stroke = STROKES[k % STROKES.len()];
        for pl in &ov.contour.polylines {
            let mut d = String::new();
            for (n, &(x, y)) in pl.iter().enumerate() {
                d.push_str(&format!("{}{:.2} {:.2}", if n == 0 { "M" } else { " L" }, sx(x), sy(y)));
            }
            out.push_str(&format!(
                "<path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"><title>{}</title></path>\n",
                escape(&ov.label)
            ));
        }
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(labels.0)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(labels.1)
    ));
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
