//! Flat `key = value` manifest.
//!
//! Floats are written in shortest round-trip form (`inf`, `-inf`, `nan` for
//! the non-finite cases), so parsing a manifest gives back exactly the values
//! that were written. The syntax is a subset of TOML for values up to
//! `i64::MAX`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Value {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    Floats(Vec<f64>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        fn same(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => same(*a, *b),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Floats(a), Value::Floats(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(*x, *y))
            }
            _ => false,
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, Value)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: Value) -> &mut Self {
        debug_assert!(self.get(key).is_none(), "duplicate manifest key {key}");
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn int(&mut self, key: &str, v: u64) -> &mut Self {
        self.push(key, Value::Int(v))
    }

    pub fn float(&mut self, key: &str, v: f64) -> &mut Self {
        self.push(key, Value::Float(v))
    }

    pub fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.push(key, Value::Bool(v))
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        self.push(key, Value::Str(v.into()))
    }

    pub fn floats(&mut self, key: &str, v: &[f64]) -> &mut Self {
        self.push(key, Value::Floats(v.to_vec()))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_float(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(v) => Some(*v),
            Value::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = write!(out, "{k} = ");
            match v {
                Value::Int(i) => {
                    let _ = write!(out, "{i}");
                }
                Value::Float(f) => out.push_str(&format_float(*f)),
                Value::Bool(b) => {
                    let _ = write!(out, "{b}");
                }
                Value::Str(s) => {
                    let _ = write!(out, "{s:?}");
                }
                Value::Floats(fs) => {
                    out.push('[');
                    for (i, f) in fs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&format_float(*f));
                    }
                    out.push(']');
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("manifest line {}: {what}", lineno + 1));
            let (key, raw) = line
                .split_once(" = ")
                .ok_or_else(|| bad("expected `key = value`"))?;
            let value = if let Some(inner) = raw.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| bad("unterminated array"))?;
                let items = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|s| parse_float(s.trim()))
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| bad("bad float in array"))?
                };
                Value::Floats(items)
            } else if raw.starts_with('"') {
                let inner = raw
                    .strip_prefix('"')
                    .and_then(|s| s.strip_suffix('"'))
                    .ok_or_else(|| bad("unterminated string"))?;
                Value::Str(inner.replace("\\\"", "\"").replace("\\\\", "\\"))
            } else if raw == "true" || raw == "false" {
                Value::Bool(raw == "true")
            } else if let Ok(i) = raw.parse::<u64>() {
                Value::Int(i)
            } else {
                Value::Float(parse_float(raw).ok_or_else(|| bad("unrecognised value"))?)
            };
            m.entries.push((key.to_string(), value));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
