//! Row-oriented results rendered as CSV or as the JSON envelope.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits in scientific notation: round-trips every `f64`
/// and never depends on locale or platform.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Parse what [`fmt_float`] writes (plus anything `f64::from_str` accepts).
pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "nan" | "NaN" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// JSON has no infinities; non-finite values become strings.
pub fn json_float(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt_float(v))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|c| match c {
                    Cell::Num(v) => fmt_float(*v),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(t) => t.clone(),
                    Cell::Empty => String::new(),
                }))?;
            }
            w.flush()?;
            Ok(())
        };
        write(&mut w).expect("writing to memory");
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8 input")
    }

    pub fn to_json_rows(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (k, c) in self.header.iter().zip(row) {
                    let v = match c {
                        Cell::Num(v) => json_float(*v),
                        Cell::Int(n) => json!(n),
                        Cell::Text(t) => Value::String(t.clone()),
                        Cell::Empty => Value::Null,
                    };
                    m.insert((*k).to_string(), v);
                }
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [1.0 / 3.0, 1e-300, 5e-324, 12345.678, -0.7, 2.0] {
            let s = fmt_float(v);
            assert_eq!(parse_float(&s).unwrap(), v, "{s}");
        }
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert!(parse_float("nan").unwrap().is_nan());
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["p", "error"]);
        t.push(vec![Cell::Num(1.5), Cell::Text("range error: p, q".into())]);
        t.push(vec![Cell::Empty, Cell::Empty]);
        let csv = t.to_csv();
        assert_eq!(csv, "p,error\n1.5000000000000000e0,\"range error: p, q\"\n,\n");
    }

    #[test]
    fn json_rows_keep_infinities() {
        let mut t = Table::new(&["value"]);
        t.push(vec![Cell::Num(f64::INFINITY)]);
        assert_eq!(t.to_json_rows(), json!([{"value": "inf"}]));
    }
}
