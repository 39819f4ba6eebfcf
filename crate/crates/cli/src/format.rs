//! Number formatting and the CSV / JSON-lines writers.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

/// `x` with 15 significant digits, trailing zeros dropped (like C's `%.15g`).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => escape(s),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(num(*x)),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Effective configuration of a run, in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig(pub Vec<(String, String)>);

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self(vec![("command".into(), command.into())])
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    /// `# lorentz <version> key=value ...`
    pub fn header_line(&self) -> String {
        let mut s = format!("# lorentz {}", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.0 {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    fn json(&self) -> Value {
        let config: Map<String, Value> = self.0.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({ "tool": "lorentz", "version": env!("CARGO_PKG_VERSION"), "config": config })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Column `name` as numbers; text cells are skipped.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .filter_map(|r| match &r[idx] {
                    Cell::Num(x) => Some(*x),
                    Cell::Int(n) => Some(*n as f64),
                    Cell::Text(_) => None,
                })
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A table with the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub config: RunConfig,
    pub table: Table,
}

impl Document {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json_lines(),
        }
    }

    /// Header line, column names, rows; CRLF line ends per RFC 4180.
    pub fn csv(&self) -> String {
        let mut out = self.config.header_line();
        out.push_str("\r\n");
        out.push_str(&self.csv_body());
        out
    }

    /// Everything after the header line.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        let names: Vec<String> = self.table.columns.iter().map(|c| escape(c)).collect();
        out.push_str(&names.join(","));
        out.push_str("\r\n");
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push_str("\r\n");
        }
        out
    }

    /// A header object on the first line, then one object per row.
    pub fn json_lines(&self) -> String {
        let mut out = self.config.json().to_string();
        out.push('\n');
        for row in &self.table.rows {
            let obj: Map<String, Value> = self
                .table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.clone(), v.json()))
                .collect();
            out.push_str(&Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(num(-0.1), "-0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333333333");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(1.5e20), "1.5e20");
        assert_eq!(num(123456789012345.0), "123456789012345");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::from("x,y"), Cell::from(0.5)]);
        let doc = Document {
            config: RunConfig::new("test").set("p", 2),
            table: t,
        };
        let csv = doc.csv();
        assert!(csv.starts_with("# lorentz "));
        assert!(csv.contains("command=test p=2\r\n"));
        assert!(csv.ends_with("a,b\r\n\"x,y\",0.5\r\n"));
        let json = doc.json_lines();
        let first: Value = serde_json::from_str(json.lines().next().unwrap()).unwrap();
        assert_eq!(first["config"]["p"], "2");
    }
}
