//! CSV input and CSV/JSON output.
//!
//! Dialect: comma-separated, `.` decimals, UTF-8. Files with several columns
//! must start with a header row; single-column draw files must not have one.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::backtest::Series;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::domain(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)
        .map_err(|e| Error::input(path.display().to_string(), format!("cannot open: {e}")))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn rows(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    for rec in open(path)?.records() {
        let rec = rec.map_err(|e| Error::input(path.display().to_string(), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_number(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        Error::input(
            path.display().to_string(),
            format!("line {line}: '{field}' is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::input(
            path.display().to_string(),
            format!("line {line}: value {v} is not finite"),
        ));
    }
    Ok(v)
}

/// Single-column file of numbers without a header (e.g. predictive draws).
pub fn read_draws(path: &Path) -> Result<Vec<f64>> {
    let rows = rows(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 1 {
            return Err(Error::input(
                path.display().to_string(),
                format!(
                    "line {line}: expected one value per line, found {} fields",
                    fields.len()
                ),
            ));
        }
        out.push(parse_number(path, line, &fields[0])?);
    }
    if out.is_empty() {
        return Err(Error::input(path.display().to_string(), "no values"));
    }
    Ok(out)
}

/// Multi-column file with a header row.
pub struct Table {
    pub header: Vec<String>,
    /// (line number, fields)
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rows = rows(path)?;
    if rows.is_empty() {
        return Err(Error::input(path.display().to_string(), "file is empty"));
    }
    let (_, header) = rows.remove(0);
    let width = header.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(Error::input(
            path.display().to_string(),
            format!("line {line}: expected {width} fields, found {}", r.len()),
        ));
    }
    Ok(Table { header, rows })
}

/// Realised values: either a single header-less column, or a table whose
/// `value` column (or last column) holds the numbers.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let rows = rows(path)?;
    if rows.is_empty() {
        return Err(Error::input(path.display().to_string(), "no values"));
    }
    if rows[0].1.len() == 1 {
        return read_draws(path);
    }
    let table = read_table(path)?;
    let col = table.column("value").unwrap_or(table.header.len() - 1);
    let values = table
        .rows
        .iter()
        .map(|(line, r)| parse_number(path, *line, &r[col]))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::input(path.display().to_string(), "no values"));
    }
    Ok(values)
}

/// Two-column `timestamp,value` series with a header.
pub fn read_series(path: &Path) -> Result<Series> {
    let table = read_table(path)?;
    if table.header.len() != 2 {
        return Err(Error::input(
            path.display().to_string(),
            format!(
                "expected two columns (timestamp, value), found {}",
                table.header.len()
            ),
        ));
    }
    let mut timestamps = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for (line, r) in &table.rows {
        timestamps.push(r[0].clone());
        values.push(parse_number(path, *line, &r[1])?);
    }
    if values.is_empty() {
        return Err(Error::input(
            path.display().to_string(),
            "series has no observations",
        ));
    }
    Ok(Series { timestamps, values })
}

pub fn write_draws(path: &Path, draws: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in draws {
        writeln!(w, "{d}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records as CSV (header from field names) or as a JSON array.
pub fn write_records<T: Serialize, W: Write>(out: W, records: &[T], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)
                    .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)
                .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Writes to `path`, or to stdout when `path` is None.
pub fn emit<T: Serialize>(path: Option<&Path>, records: &[T], format: Format) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| {
                Error::input(p.display().to_string(), format!("cannot create: {e}"))
            })?;
            write_records(BufWriter::new(f), records, format)
        }
        None => write_records(io::stdout().lock(), records, format),
    }
}
