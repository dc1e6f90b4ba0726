//! Minimal CSV handling for numeric tables.
//!
//! The on-disk dialect is deliberately small: comma-separated decimal
//! numbers, one row per line, parsed locale-independently. A single
//! optional header row is detected by failing to parse as numbers and
//! skipped. Values are emitted in scientific notation with sixteen
//! significant digits so artifacts survive a round trip exactly enough
//! for downstream tolerance checks.

use std::fmt;
use std::path::Path;

/// A CSV problem with enough position information to fix the file.
#[derive(Debug)]
pub struct CsvError {
    path: String,
    /// 1-based line number; 0 when the problem is file-wide.
    line: usize,
    message: String,
}

impl CsvError {
    fn new(path: &Path, line: usize, message: String) -> Self {
        CsvError {
            path: path.display().to_string(),
            line,
            message,
        }
    }
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path, self.message)
        } else {
            write!(f, "{}:{}: {}", self.path, self.line, self.message)
        }
    }
}

impl std::error::Error for CsvError {}

/// Reads a rectangular table of finite numbers, skipping one leading
/// header row if the first non-empty line does not parse.
pub fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, CsvError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CsvError::new(path, 0, format!("cannot read file: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_candidate = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line
            .split(',')
            .map(|field| field.trim().parse::<f64>())
            .collect();
        let vals = match parsed {
            Ok(vals) => vals,
            Err(_) if header_candidate => {
                header_candidate = false;
                continue;
            }
            Err(e) => {
                return Err(CsvError::new(
                    path,
                    idx + 1,
                    format!("expected comma-separated numbers: {e}"),
                ));
            }
        };
        header_candidate = false;
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            return Err(CsvError::new(
                path,
                idx + 1,
                format!("column {} is not finite", bad + 1),
            ));
        }
        match width {
            Some(w) if vals.len() != w => {
                return Err(CsvError::new(
                    path,
                    idx + 1,
                    format!("row has {} columns, expected {}", vals.len(), w),
                ));
            }
            Some(_) => {}
            None => width = Some(vals.len()),
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(CsvError::new(path, 0, "no data rows".to_string()));
    }
    Ok(rows)
}

/// Reads a single-column table, as used for log-density heights.
pub fn read_column(path: &Path) -> Result<Vec<f64>, CsvError> {
    let rows = read_table(path)?;
    if rows[0].len() != 1 {
        return Err(CsvError::new(
            path,
            0,
            format!("expected a single column, found {}", rows[0].len()),
        ));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// Formats one row with sixteen significant digits per value.
pub fn format_row(vals: &[f64]) -> String {
    let fields: Vec<String> = vals.iter().map(|v| format!("{v:.15e}")).collect();
    fields.join(",")
}

/// Writes rows to `path`, one line each, with an optional header line.
pub fn write_table(
    path: &Path,
    header: Option<&str>,
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(h);
        out.push('\n');
    }
    for row in rows {
        out.push_str(&format_row(&row));
        out.push('\n');
    }
    std::fs::write(path, out)
}
