//! CSV and JSON emission. Every artifact starts with the config hash and seed.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    header: Vec<String>,
    comments: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: String) {
        self.comments.push(line);
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, hash: &str, seed: u64) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        writeln!(buf, "# thermoform config_hash={hash} seed={seed}").map_err(CliError::io)?;
        for c in &self.comments {
            writeln!(buf, "# {c}").map_err(CliError::io)?;
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.header).map_err(CliError::io)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::io)?;
        }
        w.into_inner().map_err(|e| CliError::io(e.into_error()))
    }
}

pub fn json_bytes(value: &Value, hash: &str, seed: u64) -> Result<Vec<u8>, CliError> {
    let doc = serde_json::json!({ "config_hash": hash, "seed": seed, "data": value });
    let mut out = serde_json::to_vec_pretty(&doc).map_err(CliError::io)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(CliError::io),
        None => std::io::stdout().write_all(bytes).map_err(CliError::io),
    }
}
