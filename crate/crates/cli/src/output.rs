use std::fmt::Write;

use eig_core::ScenarioConfig;
use serde_json::{json, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
}

impl Value {
    fn csv(self) -> String {
        match self {
            // 12 significant digits, locale independent
            Value::Real(x) => format!("{x:.11e}"),
            Value::Int(i) => i.to_string(),
        }
    }

    fn json(self) -> Json {
        match self {
            Value::Real(x) => Json::from(x),
            Value::Int(i) => Json::from(i),
        }
    }
}

/// Rows of one subcommand plus free-form notes (failed points, warnings).
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, command: &str, config: &ScenarioConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# eig {} {command}", env!("CARGO_PKG_VERSION")).unwrap();
        for line in config.to_toml_string().lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                writeln!(out, "# {line}").unwrap();
            }
        }
        for note in &self.notes {
            writeln!(out, "# note: {note}").unwrap();
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.csv()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, command: &str, config: &ScenarioConfig) -> String {
        let rows: Vec<Json> = self.rows.iter().map(|r| Json::Array(r.iter().map(|v| v.json()).collect())).collect();
        let doc = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "scenario": config.to_toml_string(),
            "notes": self.notes,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("table serializes");
        text.push('\n');
        text
    }
}
