//! Minimal CSV emission: rectangular tables of typed cells with
//! round-trippable floating-point formatting (17 significant digits).

use std::fmt::Write as _;
use std::path::Path;

/// One cell of an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    /// Rendered as an empty field (quantity not defined on this row).
    Empty,
}

impl CsvValue {
    fn render(&self, out: &mut String) {
        match self {
            CsvValue::Int(v) => {
                let _ = write!(out, "{v}");
            }
            // 1 leading + 16 fractional digits = 17 significant digits,
            // enough to reproduce any f64 exactly on read-back.
            CsvValue::Float(v) => {
                let _ = write!(out, "{v:.16e}");
            }
            CsvValue::Bool(v) => {
                let _ = write!(out, "{v}");
            }
            CsvValue::Str(v) => {
                assert!(
                    !v.contains(',') && !v.contains('\n'),
                    "cell text may not contain separators"
                );
                out.push_str(v);
            }
            CsvValue::Empty => {}
        }
    }
}

impl From<f64> for CsvValue {
    fn from(v: f64) -> Self {
        CsvValue::Float(v)
    }
}

impl From<i64> for CsvValue {
    fn from(v: i64) -> Self {
        CsvValue::Int(v)
    }
}

impl From<usize> for CsvValue {
    fn from(v: usize) -> Self {
        CsvValue::Int(v as i64)
    }
}

impl From<bool> for CsvValue {
    fn from(v: bool) -> Self {
        CsvValue::Bool(v)
    }
}

impl From<&str> for CsvValue {
    fn from(v: &str) -> Self {
        CsvValue::Str(v.to_owned())
    }
}

impl From<Option<f64>> for CsvValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(CsvValue::Empty, CsvValue::Float)
    }
}

/// Header plus rectangular data rows.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<CsvValue>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<CsvValue>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<CsvValue>] {
        &self.rows
    }

    /// Serialize with `,` separators and `\n` line endings.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}
