//! Tabular results and their two renderings: CSV (UTF-8, comma-separated,
//! LF line endings, mandatory header, `#meta ` JSON footer lines) and a
//! JSON envelope `{"command": ..., "rows": [...], "meta": [...]}`.
//!
//! Numbers are written with 17 significant digits, enough to reproduce
//! every double exactly, so regenerated outputs are byte-stable.

use serde_json::{json, Map, Value};

/// One table cell. `Blank` renders as an empty CSV field / JSON null.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Str(String),
    Blank,
}

/// One command's result: a header, data rows, and footer objects.
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<Value>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Table {
            command,
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// 17 significant digits: the shortest fixed-width format that
/// round-trips every f64 bit pattern.
pub fn format_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_cell_csv(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_num(*x),
        Cell::Bool(b) => b.to_string(),
        Cell::Str(s) => csv_escape(s),
        Cell::Blank => String::new(),
    }
}

fn cell_json(cell: &Cell) -> Value {
    match cell {
        Cell::Num(x) => json!(x),
        Cell::Bool(b) => json!(b),
        Cell::Str(s) => json!(s),
        Cell::Blank => Value::Null,
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(render_cell_csv).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    for meta in &table.meta {
        out.push_str("#meta ");
        out.push_str(&meta.to_string());
        out.push('\n');
    }
    out
}

pub fn render_json(table: &Table) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, cell) in table.columns.iter().zip(row) {
                obj.insert((*name).to_string(), cell_json(cell));
            }
            Value::Object(obj)
        })
        .collect();
    let envelope = json!({
        "command": table.command,
        "rows": rows,
        "meta": table.meta,
    });
    let mut text = serde_json::to_string_pretty(&envelope).expect("tables serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_render_with_17_significant_digits_and_round_trip() {
        for &x in &[0.02, -0.43, 1.0 / 3.0, 6.02e23, -5.5e-12, 0.0] {
            let s = format_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s
                .chars()
                .take_while(|c| *c != 'e')
                .filter(|c| c.is_ascii_digit())
                .count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn csv_layout_is_header_rows_then_meta_footers() {
        let mut t = Table::new("demo", &["a", "b", "flag"]);
        t.push(vec![Cell::Num(1.0), Cell::Bool(true), Cell::Blank]);
        t.push(vec![Cell::Num(0.5), Cell::Bool(false), Cell::Str("x".into())]);
        t.meta.push(json!({"theta": 0.1}));
        let csv = render_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "a,b,flag");
        assert_eq!(lines[1], "1.0000000000000000e0,true,");
        assert_eq!(lines[2], "5.0000000000000000e-1,false,x");
        assert!(lines[3].starts_with("#meta {"));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn json_envelope_carries_command_rows_and_meta() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![Cell::Num(2.0), Cell::Blank]);
        t.meta.push(json!({"n": 1}));
        let v: Value = serde_json::from_str(&render_json(&t)).unwrap();
        assert_eq!(v["command"], "demo");
        assert_eq!(v["rows"][0]["a"], json!(2.0));
        assert_eq!(v["rows"][0]["b"], Value::Null);
        assert_eq!(v["meta"][0]["n"], 1);
    }
}
