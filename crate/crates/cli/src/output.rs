//! Deterministic CSV and JSON emission.
//!
//! Every real is written with 17 significant digits in scientific notation
//! and lines end in `\n`, so identical runs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Number, Value};

pub fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        // no negative zero in the output
        format!("{:.16e}", 0.0)
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// A JSON number carrying the fixed formatting; non-finite values are `null`.
pub fn real(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(fmt_real(v).parse::<Number>().expect("formatted real"))
    } else {
        Value::Null
    }
}

/// Rewrites every non-integer number of a serialized value in the fixed
/// format.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => real(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(normalize(serde_json::to_value(v)?))
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

pub fn json_text(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Collects the paths written during one run.
pub struct Emitter {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut text = String::with_capacity(4096);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<PathBuf> {
        self.write_bytes(name, json_text(v)?.as_bytes())
    }
}
