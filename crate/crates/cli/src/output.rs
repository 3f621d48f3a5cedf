use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::CliError;

/// Comma-separated table with a header row. Floats use Rust's shortest
/// round-trip formatting, so identical inputs give identical bytes.
pub fn csv<I>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::config(format!("writing {}: {e}", path.display())))
}

pub fn stdout(text: &str) -> Result<(), CliError> {
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

/// `prefix.ext`, keeping any dots already in the prefix.
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes a time series and a report to `prefix.csv` and `prefix.json`, or
/// the report alone to stdout when no prefix is given.
pub fn emit(prefix: Option<&Path>, csv_text: &str, report: &str) -> Result<(), CliError> {
    match prefix {
        Some(p) => {
            write_file(&with_ext(p, "csv"), csv_text)?;
            write_file(&with_ext(p, "json"), report)
        }
        None => stdout(report),
    }
}

/// Writes a table to `path`, or to stdout.
pub fn emit_table(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => stdout(text),
    }
}
