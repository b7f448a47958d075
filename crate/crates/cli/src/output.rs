//! Deterministic tabular output.
//!
//! CSV files open with `#` lines: a title, the units, and the resolved config as
//! TOML. JSON files carry the same information as fields. Numbers use Rust's
//! shortest round-trip formatting, so identical inputs give identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Format};

pub const UNITS: &str = "time in units of 1/J, fields and energies in units of J, J = 1";

/// Named columns of equal length.
pub struct Table {
    pub title: String,
    pub columns: Vec<(&'static str, Vec<f64>)>,
}

impl Table {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            columns: Vec::new(),
        }
    }

    pub fn column(mut self, name: &'static str, values: Vec<f64>) -> Self {
        self.columns.push((name, values));
        self
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }
}

fn csv_text(table: &Table, config: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", table.title));
    out.push_str(&format!("# units: {UNITS}\n"));
    out.push_str(&format!("# generator: rtchain {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str("# resolved config:\n");
    for line in config.to_toml().lines() {
        out.push_str(&format!("#   {line}\n"));
    }
    let names: Vec<&str> = table.columns.iter().map(|(n, _)| *n).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for r in 0..table.rows() {
        let row: Vec<String> = table.columns.iter().map(|(_, v)| v[r].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// JSON numbers cannot be NaN or infinite; those become strings.
fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(x.to_string())
    }
}

fn json_text(table: &Table, config: &ExperimentConfig) -> String {
    let mut columns = Map::new();
    for (name, values) in &table.columns {
        columns.insert(
            name.to_string(),
            Value::Array(values.iter().map(|&x| number(x)).collect()),
        );
    }
    let doc = json!({
        "title": table.title,
        "units": UNITS,
        "generator": format!("rtchain {}", env!("CARGO_PKG_VERSION")),
        "config": config,
        "columns": columns,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("table serialises");
    text.push('\n');
    text
}

/// Writes `table` as `<dir>/<stem>.csv` or `.json` and returns the path.
pub fn write_table(dir: &Path, stem: &str, table: &Table, config: &ExperimentConfig) -> io::Result<PathBuf> {
    let (ext, text) = match config.output.format {
        Format::Csv => ("csv", csv_text(table, config)),
        Format::Json => ("json", json_text(table, config)),
    };
    let path = dir.join(format!("{stem}.{ext}"));
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes a JSON summary with the resolved config attached.
pub fn write_summary(
    dir: &Path,
    stem: &str,
    summary: &impl Serialize,
    config: &ExperimentConfig,
) -> io::Result<PathBuf> {
    let doc = json!({
        "units": UNITS,
        "generator": format!("rtchain {}", env!("CARGO_PKG_VERSION")),
        "config": config,
        "summary": summary,
    });
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serialises");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// File-name fragment for a field value: `1.25` becomes `1.2500`.
pub fn field_tag(h: f64) -> String {
    format!("{h:.4}").replace('-', "m")
}
