//! Output-file helpers: CSV with a canonical-config comment header, fixed
//! numeric formatting, and JSON-lines statistics footers.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Format a float in scientific notation with seven significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.6e}")
}

/// A CSV writer that prefixes the file with the canonical configuration as
/// `#` comment lines and can append `#`-prefixed JSON statistics lines
/// after the table.
pub struct Report {
    writer: csv::Writer<File>,
}

impl Report {
    pub fn create<T: Serialize>(path: &Path, config: &T) -> Result<Self, CliError> {
        let mut file =
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        for line in crate::config::canonical(config).lines() {
            writeln!(file, "# {line}").map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(Report {
            writer: csv::Writer::from_writer(file),
        })
    }

    pub fn header(&mut self, columns: &[&str]) -> Result<(), CliError> {
        self.writer
            .write_record(columns)
            .map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::Io(e.to_string()))
    }

    /// Finish the table and append JSON-lines footers as comments.
    pub fn finish(self, footers: &[serde_json::Value]) -> Result<(), CliError> {
        let mut file = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Io(e.to_string()))?;
        for footer in footers {
            writeln!(file, "# {footer}").map_err(|e| CliError::Io(e.to_string()))?;
        }
        file.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}
