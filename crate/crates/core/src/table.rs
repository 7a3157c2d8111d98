//! Columnar text tables: the output format for correlator sweeps, Fisher
//! results, learning reports, and trial records.
//!
//! Layout:
//!
//! ```text
//! # otoc-table v1 schema=<name>
//! col_a:str  col_b:u64  col_c:f64
//! alpha  3  1.250000000000e0
//! beta   4  na
//! ```
//!
//! One header line with the format version and schema name, one line of
//! `name:type` column declarations (types: `str`, `u64`, `i64`, `f64`),
//! then tab-separated rows. Missing optional values are written as `na`.
//! Floats use a fixed scientific rendering so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Str,
    U64,
    I64,
    F64,
}

impl ColumnType {
    fn label(self) -> &'static str {
        match self {
            ColumnType::Str => "str",
            ColumnType::U64 => "u64",
            ColumnType::I64 => "i64",
            ColumnType::F64 => "f64",
        }
    }

    fn parse(label: &str) -> Result<Self> {
        match label {
            "str" => Ok(ColumnType::Str),
            "u64" => Ok(ColumnType::U64),
            "i64" => Ok(ColumnType::I64),
            "f64" => Ok(ColumnType::F64),
            other => Err(CoreError::Parse(format!("unknown column type `{other}`"))),
        }
    }
}

/// One cell. `Na` stands for an absent optional value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    U64(u64),
    I64(i64),
    F64(f64),
    Na,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F64(v) => Some(*v),
            Cell::U64(v) => Some(*v as f64),
            Cell::I64(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Str(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Str(s) => {
                debug_assert!(!s.contains(['\t', '\n']), "cell strings must be atomic");
                s.clone()
            }
            Cell::U64(v) => format!("{v}"),
            Cell::I64(v) => format!("{v}"),
            Cell::F64(v) => render_f64(*v),
            Cell::Na => "na".to_string(),
        }
    }
}

/// Deterministic float rendering: fixed 12-digit scientific notation.
pub fn render_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.12e}")
    }
}

/// An in-memory table with a named schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub columns: Vec<(String, ColumnType)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &str, columns: Vec<(&str, ColumnType)>) -> Self {
        Table {
            schema: schema.to_string(),
            columns: columns
                .into_iter()
                .map(|(n, t)| (n.to_string(), t))
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        for (cell, (name, ty)) in row.iter().zip(&self.columns) {
            let ok = matches!(
                (cell, ty),
                (Cell::Na, _)
                    | (Cell::Str(_), ColumnType::Str)
                    | (Cell::U64(_), ColumnType::U64)
                    | (Cell::I64(_), ColumnType::I64)
                    | (Cell::F64(_), ColumnType::F64)
            );
            assert!(ok, "cell type mismatch in column {name}");
        }
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# otoc-table v1 schema={}", self.schema);
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|(n, t)| format!("{n}:{}", t.label()))
            .collect();
        let _ = writeln!(s, "{}", header.join("\t"));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", line.join("\t"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Table> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty table".into()))?;
        let schema = header
            .strip_prefix("# otoc-table v1 schema=")
            .ok_or_else(|| CoreError::Parse(format!("bad table header: {header}")))?
            .to_string();
        let cols_line = lines
            .next()
            .ok_or_else(|| CoreError::Parse("missing column line".into()))?;
        let mut columns = Vec::new();
        for decl in cols_line.split('\t') {
            let (name, ty) = decl
                .rsplit_once(':')
                .ok_or_else(|| CoreError::Parse(format!("bad column decl `{decl}`")))?;
            columns.push((name.to_string(), ColumnType::parse(ty)?));
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != columns.len() {
                return Err(CoreError::Parse(format!(
                    "row width {} != {} columns",
                    cells.len(),
                    columns.len()
                )));
            }
            let mut row = Vec::with_capacity(cells.len());
            for (raw, (_, ty)) in cells.iter().zip(&columns) {
                let cell = if *raw == "na" {
                    Cell::Na
                } else {
                    match ty {
                        ColumnType::Str => Cell::Str(raw.to_string()),
                        ColumnType::U64 => Cell::U64(
                            raw.parse()
                                .map_err(|e| CoreError::Parse(format!("u64: {e}")))?,
                        ),
                        ColumnType::I64 => Cell::I64(
                            raw.parse()
                                .map_err(|e| CoreError::Parse(format!("i64: {e}")))?,
                        ),
                        ColumnType::F64 => Cell::F64(
                            raw.parse()
                                .map_err(|e| CoreError::Parse(format!("f64: {e}")))?,
                        ),
                    }
                };
                row.push(cell);
            }
            rows.push(row);
        }
        Ok(Table {
            schema,
            columns,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let mut t = Table::new(
            "demo",
            vec![
                ("name", ColumnType::Str),
                ("count", ColumnType::U64),
                ("value", ColumnType::F64),
                ("offset", ColumnType::I64),
            ],
        );
        t.push(vec![
            Cell::Str("alpha".into()),
            Cell::U64(3),
            Cell::F64(1.25),
            Cell::I64(-2),
        ]);
        t.push(vec![
            Cell::Str("beta".into()),
            Cell::U64(0),
            Cell::Na,
            Cell::I64(7),
        ]);
        let text = t.to_text();
        let back = Table::from_text(&text).unwrap();
        assert_eq!(back, t);
        // byte determinism
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn renders_are_stable() {
        assert_eq!(render_f64(0.03), "3.000000000000e-2");
        assert_eq!(render_f64(-1.0), "-1.000000000000e0");
        assert_eq!(render_f64(f64::NAN), "nan");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Table::from_text("junk").is_err());
        assert!(Table::from_text("# otoc-table v1 schema=x\na:b64\n").is_err());
        let bad_row = "# otoc-table v1 schema=x\na:u64\t b:f64\n3\n";
        assert!(Table::from_text(bad_row).is_err());
    }
}
