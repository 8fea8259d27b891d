//! Numeric CSV in and out.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::manifest::{parse_header, RunManifest};

/// Shortest round-trip decimal; exponent form outside a readable range.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Accumulates a CSV body behind the manifest comment.
pub struct CsvBuilder {
    buf: String,
    width: usize,
}

impl CsvBuilder {
    pub fn new(manifest: &RunManifest, columns: &[&str]) -> Self {
        let mut buf = manifest.header_line();
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Self { buf, width: columns.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{}", num(*v));
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// A parsed input dataset: the requested columns, in request order.
#[derive(Debug)]
pub struct InputTable {
    pub columns: Vec<Vec<f64>>,
    pub manifest: Option<Map<String, Value>>,
    /// SHA-256 of the raw file, for provenance without embedding the path.
    pub sha256: String,
}

impl InputTable {
    pub fn input_manifest(&self) -> Value {
        self.manifest.clone().map_or(Value::Null, Value::Object)
    }
}

pub fn read_table(path: &Path, required: &[&str]) -> CliResult<InputTable> {
    let raw = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let text = String::from_utf8(raw).map_err(|_| CliError::parse(path, 1, "file is not UTF-8"))?;
    let manifest = parse_header(&text);

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_line = text.lines().position(|l| !l.trim_start().starts_with('#')).unwrap_or(0) as u64 + 1;
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(path, header_line, e.to_string()))?
        .clone();
    let index: Vec<usize> = required
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| {
                CliError::parse(
                    path,
                    header_line,
                    format!("missing column '{name}' (expected {})", required.join(",")),
                )
            })
        })
        .collect::<CliResult<_>>()?;

    let mut columns = vec![Vec::new(); required.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, &i) in index.iter().enumerate() {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(path, line, format!("column '{}': '{field}' is not a number", required[col]))
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(path, line, format!("column '{}': non-finite value", required[col])));
            }
            columns[col].push(v);
        }
    }
    Ok(InputTable { columns, manifest, sha256: hex::encode(Sha256::digest(text.as_bytes())) })
}
