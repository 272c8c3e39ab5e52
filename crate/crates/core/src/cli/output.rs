//! CSV and JSON rendering of command results.
//!
//! Both formats carry the same payload: a metadata block (tool version,
//! command, timestamp, warnings, scalar notes and the fully resolved config)
//! followed by a numeric table. In CSV the metadata are `#` comment lines and
//! the resolved config is embedded verbatim, so it can be cut out and re-run.

use serde::Serialize;
use serde_json::json;

use super::config::{serialize, RunConfig};

pub const ARTIFACT: &str = "owi-sim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    /// Seconds since the Unix epoch, or 0 with a fixed clock.
    pub generated_unix_s: u64,
    pub warnings: Vec<String>,
    /// Named scalar results that do not belong in the table.
    pub notes: Vec<(String, f64)>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Scientific notation with 17 significant digits, enough to round-trip f64.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_csv(meta: &Metadata, table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {ARTIFACT} {VERSION}\n"));
    out.push_str(&format!("# command: {}\n", meta.command));
    out.push_str(&format!("# generated_unix_s: {}\n", meta.generated_unix_s));
    for w in &meta.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    for (name, value) in &meta.notes {
        out.push_str(&format!("# {name}: {}\n", number(*value)));
    }
    out.push_str("# config:\n");
    for line in serialize(&meta.config).lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str(&format!("#   {line}\n"));
        }
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| number(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(meta: &Metadata, table: &Table) -> String {
    let notes: serde_json::Map<String, serde_json::Value> =
        meta.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let doc = json!({
        "metadata": {
            "artifact": ARTIFACT,
            "version": VERSION,
            "command": meta.command,
            "generated_unix_s": meta.generated_unix_s,
            "warnings": meta.warnings,
            "notes": notes,
            "config": meta.config,
            "config_text": serialize(&meta.config),
        },
        "columns": table.columns,
        "rows": table.rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("result documents always serialize");
    text.push('\n');
    text
}

/// Columns and rows read back from a result file of either format.
pub fn parse_result(text: &str) -> Result<Table, String> {
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("not valid JSON: {e}"))?;
        let columns: Vec<String> = serde_json::from_value(doc["columns"].clone())
            .map_err(|_| "JSON result has no `columns` list".to_string())?;
        let rows: Vec<Vec<Option<f64>>> =
            serde_json::from_value(doc["rows"].clone()).map_err(|_| "JSON result has no numeric `rows`".to_string())?;
        let rows = rows.into_iter().map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect();
        return check_shape(Table { columns, rows });
    }
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("no column header found")?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|_| format!("data row {} is not numeric", i + 1))?);
    }
    check_shape(Table { columns, rows })
}

fn check_shape(table: Table) -> Result<Table, String> {
    if let Some(i) = table.rows.iter().position(|r| r.len() != table.columns.len()) {
        return Err(format!("data row {} has the wrong number of fields", i + 1));
    }
    Ok(table)
}
