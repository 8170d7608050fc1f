//! Bit-stable number formatting and tabular writers.
//!
//! CSV output uses `,` separators, LF line endings and 17 significant digits, and
//! starts with a single `#` comment line naming the library version and the run
//! configuration. JSON output carries the same information in a `meta` object.

use serde_json::{json, Map, Value};

use crate::VERSION;

/// Formats a double with 17 significant digits (round-trips exactly).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Run configuration echoed into every output file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub command: String,
    pub params: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: impl Into<String>) -> Self {
        Header {
            command: command.into(),
            params: Vec::new(),
        }
    }

    pub fn param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn csv_comment(&self) -> String {
        let mut line = format!("# walras-miso {VERSION} command={}", self.command);
        for (k, v) in &self.params {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }

    pub fn json_meta(&self) -> Value {
        let mut params = Map::new();
        for (k, v) in &self.params {
            params.insert(k.clone(), Value::String(v.clone()));
        }
        json!({
            "library": "walras-miso",
            "version": VERSION,
            "command": self.command,
            "config": params,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A named-column table that renders to CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let mut out = header.csv_comment();
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert(col.clone(), cell.json());
                }
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn to_json(&self, header: &Header) -> String {
        let doc = json!({ "meta": header.json_meta(), "rows": self.to_json_value() });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Parses the data rows of a CSV produced by [`Table::to_csv`] (comment and column lines skipped).
pub fn parse_csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    proptest! {
        #[test]
        fn formatted_doubles_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["label", "x", "ok"]);
        t.push(vec!["nash".into(), 0.5.into(), true.into()]);
        let h = Header::new("test").param("seed", 3);
        let csv = t.to_csv(&h);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], format!("# walras-miso {VERSION} command=test seed=3"));
        assert_eq!(lines[1], "label,x,ok");
        assert_eq!(lines[2], "nash,5.0000000000000000e-1,true");
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
        let (cols, rows) = parse_csv_rows(&csv);
        assert_eq!(cols, vec!["label", "x", "ok"]);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(["a"]);
        t.push(vec![2usize.into()]);
        let v: Value = serde_json::from_str(&t.to_json(&Header::new("x"))).unwrap();
        assert_eq!(v["meta"]["command"], "x");
        assert_eq!(v["rows"][0]["a"], 2);
    }
}
