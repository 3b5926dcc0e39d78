//! Experiment reports: JSON with fixed float formatting, CSV tables and
//! minimal SVG line plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "geolab/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing was asserted (for example a plain census).
    Info,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self != Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Comma-separated with a header row and LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::String(s) => csv_field(s),
                    Value::Null => String::new(),
                    other => compact(other),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub table: Table,
    pub verdict: Verdict,
    pub slack: Option<f64>,
    pub notes: Vec<String>,
    /// The resolved run configuration, attached by the runner.
    pub config: Option<BTreeMap<String, String>>,
}

impl Report {
    pub fn new(experiment: &str, table: Table, verdict: Verdict) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            table,
            verdict,
            slack: None,
            notes: Vec::new(),
            config: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = Some(slack);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn to_value(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("schema".into(), SCHEMA.into());
        m.insert("version".into(), VERSION.into());
        m.insert("experiment".into(), self.experiment.clone().into());
        m.insert("params".into(), Value::Object(self.params.clone().into_iter().collect()));
        let rows: Vec<Value> = self.table.rows.iter().map(|r| Value::Array(r.clone())).collect();
        let mut table = serde_json::Map::new();
        table.insert("columns".into(), self.table.columns.clone().into());
        table.insert("rows".into(), Value::Array(rows));
        m.insert("table".into(), Value::Object(table));
        m.insert("verdict".into(), serde_json::to_value(self.verdict).expect("enum serializes"));
        m.insert("slack".into(), self.slack.map_or(Value::Null, Value::from));
        m.insert("notes".into(), self.notes.clone().into());
        if let Some(c) = &self.config {
            m.insert("config".into(), Value::Object(c.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect()));
        }
        Value::Object(m)
    }

    /// Pretty JSON with every float at 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_value(&mut out, &self.to_value(), 0);
        out.push('\n');
        out
    }

    /// `PASS slack=…`, `FAIL slack=…` or `INFO`.
    pub fn verdict_line(&self) -> String {
        let slack = self.slack.map(|s| format!(" slack={}", format_float(s))).unwrap_or_default();
        match self.verdict {
            Verdict::Pass => format!("PASS{slack}"),
            Verdict::Fail => format!("FAIL{slack}"),
            Verdict::Info => "INFO".to_string(),
        }
    }
}

/// `x` in scientific notation with 17 significant digits (round-trip exact).
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // not representable in JSON
        "null".to_string()
    }
}

fn compact(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, usize::MAX);
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pretty = indent != usize::MAX;
    let pad = |out: &mut String, k: usize| {
        if pretty {
            out.push('\n');
            out.push_str(&"  ".repeat(k));
        }
    };
    match v {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                let _ = write!(out, "{n}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::Array(items) => {
            // rows of scalars stay on one line
            let flat = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (k, x) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat && pretty {
                        out.push(' ');
                    }
                }
                if !flat {
                    pad(out, indent.saturating_add(1));
                }
                write_value(out, x, if flat { usize::MAX } else { indent.saturating_add(1) });
            }
            if !flat && !items.is_empty() {
                pad(out, indent);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, x)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                pad(out, indent.saturating_add(1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(out, x, indent.saturating_add(1));
            }
            if !map.is_empty() {
                pad(out, indent);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// A line plot of the given series (polylines and axes only).
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let pts = series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" points="{M},{} {M},{} {},{}"/>"#,
        M,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(out, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));
    for (v, anchor, x, y) in [(x0, "start", M, H - M + 15.0), (x1, "end", W - M, H - M + 15.0)] {
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{}</text>"#, short(v));
    }
    for (v, y) in [(y0, H - M), (y1, M)] {
        let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{}</text>"#, M - 4.0, short(v));
    }
    for (k, (name, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" font-size="11">{}</text>"#,
            W - M - 120.0,
            M + 14.0 * k as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
