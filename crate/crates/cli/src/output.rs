//! Tabular results with a metadata header, written as CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything that identifies a run. Wall time is deliberately absent so
/// that equal configurations produce equal bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub rng: &'static str,
    pub config: Value,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Summary lines, kept in the metadata.
    pub notes: Vec<(String, Value)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.notes.push((key.into(), value.into()));
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write_csv<W: Write>(meta: &Meta, table: &Table, mut out: W) -> io::Result<()> {
    writeln!(out, "# {} {}", meta.tool, meta.version)?;
    writeln!(out, "# command: {}", meta.command)?;
    writeln!(out, "# seed: {}", meta.seed)?;
    writeln!(out, "# threads: {}", meta.threads)?;
    writeln!(out, "# rng: {}", meta.rng)?;
    writeln!(out, "# config: {}", meta.config)?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}: {}", cell(v))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell))?;
    }
    w.flush()
}

pub fn write_json<W: Write>(meta: &Meta, table: &Table, mut out: W) -> io::Result<()> {
    let mut m = serde_json::to_value(meta)?;
    let notes: Map<String, Value> = table.notes.iter().cloned().collect();
    m["notes"] = Value::Object(notes);
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Object(table.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
        .collect();
    let doc = serde_json::json!({ "meta": m, "rows": rows });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(meta: &Meta, table: &Table, format: Format, path: Option<&Path>) -> io::Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => write_csv(meta, table, sink),
        Format::Json => write_json(meta, table, sink),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn meta() -> Meta {
        Meta {
            tool: "kifer",
            version: "0.0.0",
            command: "tables".into(),
            seed: 7,
            threads: 1,
            rng: "test",
            config: json!({"n": 3}),
        }
    }

    #[test]
    fn csv_has_header_then_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![json!(1), json!("x,y")]);
        t.note("verdict", "half");
        let mut buf = Vec::new();
        write_csv(&meta(), &t, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# kifer 0.0.0\n# command: tables\n# seed: 7\n"));
        assert!(s.contains("# config: {\"n\":3}\n# verdict: half\na,b\n1,\"x,y\"\n"));
    }

    #[test]
    fn json_mirrors_rows() {
        let mut t = Table::new(&["a"]);
        t.push(vec![json!(2.5)]);
        let mut buf = Vec::new();
        write_json(&meta(), &t, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["a"], json!(2.5));
        assert_eq!(v["meta"]["seed"], json!(7));
    }
}
