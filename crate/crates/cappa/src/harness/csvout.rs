//! CSV emission: RFC-4180 rows with a '#'-prefixed header block carrying the
//! manifest hash and, when available, the constants report. Floats are
//! written at full round-trip precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::harness::manifest::RunManifest;

#[derive(Debug, Clone)]
pub enum Field {
    Str(String),
    Int(i64),
    UInt(u128),
    Float(f64),
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Str(v.to_string())
    }
}
impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Str(v)
    }
}
impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}
impl From<i64> for Field {
    fn from(v: i64) -> Self {
        Field::Int(v)
    }
}
impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::UInt(v as u128)
    }
}
impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::UInt(v as u128)
    }
}
impl From<u128> for Field {
    fn from(v: u128) -> Self {
        Field::UInt(v)
    }
}
impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Int(v as i64)
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<Field>>,
    /// Extra header comments, one line each, emitted after the manifest block.
    notes: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the column list"
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Render the full file: manifest header block, notes, constants report,
    /// column header, data rows. Entirely deterministic for a fixed manifest.
    pub fn render(&self, manifest: &RunManifest) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# manifest_sha256: {}", manifest.hash());
        let _ = writeln!(out, "# library_version: {}", manifest.library_version);
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        for (k, v) in &manifest.constants {
            let _ = writeln!(out, "# constant {k}: {v}");
        }
        let _ = writeln!(
            out,
            "{}",
            self.columns
                .iter()
                .map(|c| quote(c))
                .collect::<Vec<_>>()
                .join(",")
        );
        for row in &self.rows {
            let line = row
                .iter()
                .map(|f| match f {
                    Field::Str(s) => quote(s),
                    Field::Int(v) => v.to_string(),
                    Field::UInt(v) => v.to_string(),
                    Field::Float(v) => format_float(*v),
                })
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn write(&self, manifest: &RunManifest, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.render(manifest))?;
        Ok(())
    }
}
