//! CSV and JSON emission.
//!
//! CSV files open with `#` comment lines holding the tool version, the
//! subcommand and the resolved configuration as TOML. JSON documents carry
//! the same information under a leading `meta` key. Floats use Rust's
//! shortest round-trip representation.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{RawConfig, RunConfig};
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "dephase";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Extra `# key: value` lines after the config.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self, command: &str, cfg: &RunConfig) -> CliResult<String> {
        let mut out = header_comment(command, cfg)?;
        for (k, v) in &self.notes {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)
            .map_err(|e| CliError::io("csv", e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}")))
                .map_err(|e| CliError::io("csv", e))?;
        }
        let body = w.into_inner().map_err(|e| CliError::io("csv", e))?;
        out.push_str(&String::from_utf8(body).map_err(|e| CliError::io("csv", e))?);
        Ok(out)
    }

    pub fn to_json(&self, command: &str, cfg: &RunConfig) -> CliResult<String> {
        let mut body = Map::new();
        for (k, v) in &self.notes {
            body.insert(k.clone(), json!(v));
        }
        body.insert("columns".into(), json!(self.columns));
        body.insert("rows".into(), json!(self.rows));
        json_document(command, cfg, Value::Object(body))
    }

    /// Reads a CSV written by [`Table::to_csv`], skipping comment lines.
    pub fn read_csv(path: &Path) -> CliResult<Table> {
        let mut text = String::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| CliError::io(path.display(), e))?;
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| CliError::io(path.display(), e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::io(path.display(), e))?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| {
                    CliError::Config(format!("{}: data row {}: {e}", path.display(), line + 1))
                })?;
            rows.push(row);
        }
        Ok(Table {
            columns,
            rows,
            notes: Vec::new(),
        })
    }
}

/// The resolved configuration minus the output path, so a run written to
/// two different files produces identical bytes.
fn echoed(cfg: &RunConfig) -> RawConfig {
    let mut raw = cfg.to_raw();
    raw.output.path = None;
    raw
}

fn header_comment(command: &str, cfg: &RunConfig) -> CliResult<String> {
    let toml = toml::to_string(&echoed(cfg)).map_err(|e| CliError::io("config echo", e))?;
    let mut out = format!("# {TOOL} {VERSION}\n# command: {command}\n");
    for line in toml.lines().filter(|l| !l.is_empty()) {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    Ok(out)
}

pub fn meta(command: &str, cfg: &RunConfig) -> CliResult<Value> {
    let config = serde_json::to_value(echoed(cfg)).map_err(|e| CliError::io("config echo", e))?;
    Ok(json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config": config,
    }))
}

/// `{"meta": …, <body fields>}` pretty-printed.
pub fn json_document(command: &str, cfg: &RunConfig, body: Value) -> CliResult<String> {
    let mut doc = Map::new();
    doc.insert("meta".into(), meta(command, cfg)?);
    match body {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    serde_json::to_string_pretty(&Value::Object(doc))
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::io("json", e))
}
