//! CSV tables and number formatting.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

/// Errors: scientific notation, 6 significant digits.
pub fn fmt_error(x: f64) -> String {
    format!("{x:.5e}")
}

/// Energies: 12 digits after the decimal point.
pub fn fmt_energy(x: f64) -> String {
    format!("{x:.12}")
}

/// Wall-clock seconds: 2 decimals.
pub fn fmt_seconds(x: f64) -> String {
    format!("{x:.2}")
}

pub fn fmt_rate(x: f64) -> String {
    format!("{x:.4}")
}

pub fn fmt_step(x: f64) -> String {
    format!("{x:.9e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Pool(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
