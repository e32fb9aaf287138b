//! Result tables and their CSV encoding.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Real,
    Int,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn ty(&self) -> ColumnType {
        match self {
            Value::Real(_) => ColumnType::Real,
            Value::Int(_) => ColumnType::Int,
            Value::Bool(_) => ColumnType::Bool,
            Value::Text(_) => ColumnType::Text,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Real(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(i64::try_from(v).unwrap_or(i64::MAX))
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Provenance of a table: enough to re-derive it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub config_hash: String,
    /// Free-form parameters such as grids and horizons, in insertion order.
    pub parameters: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: impl IntoIterator<Item = (impl Into<String>, ColumnType)>) -> Self {
        Self {
            columns: columns
                .into_iter()
                .map(|(name, ty)| Column { name: name.into(), ty })
                .collect(),
            rows: Vec::new(),
            metadata: Metadata {
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                ..Metadata::default()
            },
        }
    }

    /// Appends a row. Panics unless every column gets a value of its type,
    /// which would be a bug in the table builder.
    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (value, column) in row.iter().zip(&self.columns) {
            assert_eq!(value.ty(), column.ty, "column {}", column.name);
        }
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of one column as reals; `None` for unknown or non-numeric columns.
    pub fn real_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows.iter().map(|r| r[i].as_real()).collect()
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.metadata.parameters.push((key.to_owned(), value.to_string()));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| escape(&c.name)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, value) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match value {
                    Value::Real(v) => out.push_str(&format_real(*v)),
                    Value::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Value::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
                    Value::Text(s) => out.push_str(&escape(s)),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Nine significant digits in the style of C's `%.9g`: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros dropped.
pub fn format_real(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_owned()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_real(13.0 / 17.0), "0.764705882");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(-2.5), "-2.5");
        assert_eq!(format_real(123456789.4), "123456789");
        assert_eq!(format_real(1234567894.0), "1.23456789e+09");
        assert_eq!(format_real(1e-5), "1e-05");
        assert_eq!(format_real(0.0001234567891), "0.000123456789");
        assert_eq!(format_real(1.0 / 3.0 * 1e-7), "3.33333333e-08");
        assert_eq!(format_real(0.9999999999), "1");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new([("alpha", ColumnType::Real), ("n", ColumnType::Int), ("label", ColumnType::Text)]);
        t.push(vec![0.25.into(), 3u64.into(), "a,b".into()]);
        t.push(vec![0.5.into(), 4u64.into(), "GREEN".into()]);
        assert_eq!(t.to_csv(), "alpha,n,label\n0.25,3,\"a,b\"\n0.5,4,GREEN\n");
        assert_eq!(t.real_column("n"), Some(vec![3.0, 4.0]));
        assert_eq!(t.real_column("label"), None);
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn short_row_rejected() {
        let mut t = ResultTable::new([("a", ColumnType::Real)]);
        t.push(vec![]);
    }
}
