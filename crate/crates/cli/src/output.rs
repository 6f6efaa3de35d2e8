use std::io::Write;

use jointstat::formats::{fmt_f64, round_json};
use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Clone, Debug)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    Null,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::U(n) => Value::from(*n),
            Cell::S(s) => Value::from(s.clone()),
            Cell::B(b) => Value::from(*b),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::U(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// What a command produces: a CSV table (optionally preceded by one
/// `# `-prefixed JSON line) and a JSON document.
pub struct Report {
    pub preamble: Option<Value>,
    pub table: Table,
    pub json: Value,
}

impl Report {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &round_json(self.json.clone()))?;
                writeln!(out)
            }
            Format::Csv => {
                if let Some(p) = &self.preamble {
                    writeln!(out, "# {}", round_json(p.clone()))?;
                }
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.table.columns)?;
                for row in &self.table.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()
            }
        }
    }
}
