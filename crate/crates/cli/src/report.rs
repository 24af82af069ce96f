//! Result records: a schema-stable CSV table per command plus a JSON summary
//! that echoes the resolved config and carries the same rows losslessly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde_json::{json, Value};

/// One table cell. Numbers print into CSV with 15 significant digits; the
/// JSON summary keeps full binary64 round-trip formatting.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    /// Column present, value unavailable for this row.
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // cells never quote; keep free text comma-free instead
            Cell::Text(s) => s.replace(',', ";"),
            Cell::Num(x) => format!("{x:.14e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Empty => Value::Null,
        }
    }
}

/// A finished experiment: fixed column order, rows in input order.
pub struct Report {
    pub id: String,
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub config_echo: Value,
    pub seed_echo: String,
    extra: serde_json::Map<String, Value>,
    started: Instant,
}

impl Report {
    pub fn new(
        id: &str,
        command: &'static str,
        columns: Vec<&'static str>,
        config_echo: Value,
        seed_echo: String,
    ) -> Self {
        Self {
            id: id.to_string(),
            command,
            columns,
            rows: Vec::new(),
            config_echo,
            seed_echo,
            extra: serde_json::Map::new(),
            started: Instant::now(),
        }
    }

    /// Attach a JSON-only field to the summary (the CSV stays tabular).
    pub fn extra(&mut self, key: &str, value: Value) {
        self.extra.insert(key.to_string(), value);
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.json());
                }
                Value::Object(obj)
            })
            .collect();
        let mut value = json!({
            "id": self.id,
            "command": self.command,
            "config": self.config_echo,
            "seed": self.seed_echo,
            "rows": rows,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        for (k, v) in &self.extra {
            value[k] = v.clone();
        }
        value
    }

    /// Write `<out>/<id>.csv` and `<out>/<id>.json`.
    pub fn write(&self, out_dir: &Path) -> anyhow::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        let csv_path = out_dir.join(format!("{}.csv", self.id));
        let json_path = out_dir.join(format!("{}.json", self.id));
        std::fs::write(&csv_path, self.csv())
            .with_context(|| format!("writing {}", csv_path.display()))?;
        let mut text = serde_json::to_string_pretty(&self.json())?;
        text.push('\n');
        std::fs::write(&json_path, text)
            .with_context(|| format!("writing {}", json_path.display()))?;
        Ok((csv_path, json_path))
    }
}
