//! Plain-text `key = value` reports.
//!
//! The output is valid TOML: strings are quoted, vectors and row-major
//! matrices are arrays, and non-finite floats use `inf`/`nan`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&[f64]> for Value {
    fn from(v: &[f64]) -> Self {
        Value::List(v.to_vec())
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::List(v)
    }
}

impl From<&DVector<f64>> for Value {
    fn from(v: &DVector<f64>) -> Self {
        Value::List(v.iter().copied().collect())
    }
}

impl From<&DMatrix<f64>> for Value {
    fn from(m: &DMatrix<f64>) -> Self {
        Value::Matrix(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

/// Formats a float so that it reads back bit-for-bit.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:?}")
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| float(*x)).collect();
    format!("[{}]", items.join(", "))
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(v) => float(*v),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(s) => format!("{s:?}"),
            Value::List(v) => list(v),
            Value::Matrix(rows) => {
                let rows: Vec<String> = rows.iter().map(|r| list(r)).collect();
                format!("[{}]", rows.join(", "))
            }
        }
    }
}

/// An ordered list of entries, optionally grouped into `[sections]`.
#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
    sections: Vec<(String, Report)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Section `name`, created on first use.
    pub fn section(&mut self, name: &str) -> &mut Report {
        let idx = match self.sections.iter().position(|(n, _)| n == name) {
            Some(i) => i,
            None => {
                self.sections.push((name.to_string(), Report::new()));
                self.sections.len() - 1
            }
        };
        &mut self.sections[idx].1
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {}", v.render());
        }
        for (name, sec) in &self.sections {
            let _ = writeln!(out, "\n[{name}]");
            for (k, v) in &sec.entries {
                let _ = writeln!(out, "{k} = {}", v.render());
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_parseable_toml() {
        let mut r = Report::new();
        r.set("accepted", false)
            .set("residual", 0.1 + 0.2)
            .set("method", "antidev_so_n")
            .set("gap", f64::INFINITY)
            .set("iota", &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        r.section("tolerances").set("tol", 1e-5);
        let text = r.render();
        let parsed: toml::Table = toml::from_str(&text).unwrap();
        assert_eq!(parsed["residual"].as_float(), Some(0.1 + 0.2));
        assert_eq!(parsed["iota"][1][0].as_float(), Some(3.0));
        assert_eq!(parsed["tolerances"]["tol"].as_float(), Some(1e-5));
        assert!(parsed["gap"].as_float().unwrap().is_infinite());
    }

    #[test]
    fn set_replaces_in_place() {
        let mut r = Report::new();
        r.set("a", 1.0).set("b", 2.0).set("a", 3.0);
        assert_eq!(r.render(), "a = 3.0\nb = 2.0\n");
    }
}
