//! CSV and JSON renderings of an [`ExperimentReport`].

use serde_json::{json, Map, Value};

use super::{Cell, ExperimentReport, Format, SCHEMA_VERSION};
use crate::error::Result;

pub fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Csv => render_csv(report),
        Format::Json => render_json(report),
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::UInt(v) => v.to_string(),
        Cell::Real(v) => format_real(*v),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// 17 significant digits; non-finite values spelled out.
fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        Cell::Int(v) => json!(v),
        Cell::UInt(v) => json!(v),
        Cell::Real(v) if v.is_finite() => json!(v),
        Cell::Real(v) => json!(format_real(*v)),
        Cell::Bool(v) => json!(v),
        Cell::Text(s) => json!(s),
        Cell::Empty => Value::Null,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// `#`-prefixed header lines echoing config, calibration and summary,
/// followed by an RFC 4180 table.
pub fn render_csv(report: &ExperimentReport) -> Result<String> {
    let mut header = vec![("schema_version".to_string(), SCHEMA_VERSION.to_string())];
    flatten(
        "config",
        &serde_json::to_value(&report.config)?,
        &mut header,
    );
    if let Some(cal) = &report.calibration {
        flatten("calibration", &serde_json::to_value(cal)?, &mut header);
    }
    for (k, v) in &report.summary {
        header.push((format!("summary.{k}"), csv_field(v)));
    }
    header.push(("pass".into(), report.pass.to_string()));

    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(&report.table.columns)?;
    for row in &report.table.rows {
        w.write_record(row.iter().map(csv_field))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("CSV output is UTF-8"));
    Ok(out)
}

/// One JSON document with the same content as the CSV rendering.
pub fn render_json(report: &ExperimentReport) -> Result<String> {
    let mut summary = Map::new();
    for (k, v) in &report.summary {
        summary.insert(k.clone(), json_value(v));
    }
    let rows: Vec<Value> = report
        .table
        .rows
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for (c, v) in report.table.columns.iter().zip(row) {
                m.insert((*c).to_string(), json_value(v));
            }
            Value::Object(m)
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "calibration": report.calibration,
        "summary": summary,
        "pass": report.pass,
        "columns": report.table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}
