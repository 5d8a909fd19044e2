//! CSV wire format: `,` separator, `\n` terminator, header row required.
//! Missing values are empty fields; `NaN` is also read as missing. Reals are
//! written in their shortest round-trip decimal form.

use std::path::Path;

use crate::error::{CliError, CliResult};

/// A series read from disk: observations plus an optional ground-truth mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub observed: Vec<Option<f64>>,
    pub mean: Option<Vec<f64>>,
}

/// Formats a real for output. Non-finite values are written as missing.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// Parses one field; empty and `NaN` mean missing.
pub fn parse_field(s: &str) -> Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Err(format!("non-finite value '{s}'")),
        Err(_) => Err(format!("cannot parse '{s}' as a real number")),
    }
}

/// In-memory table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn header(&self) -> &[&'static str] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Fields of column `name`, in row order.
    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = &str> + '_> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(move |r| r[i].as_str()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row).expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }
}

/// Reads a series CSV with an `observed` column and optional `mean` and `t`
/// columns. When present, `t` must run 1, 2, 3, ...
pub fn read_series(path: &Path) -> CliResult<SeriesTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_series(file, &path.display().to_string())
}

pub fn parse_series(input: impl std::io::Read, origin: &str) -> CliResult<SeriesTable> {
    let data_err =
        |line: u64, message: String| CliError::Data { path: origin.to_string(), line: line as usize, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| data_err(1, e.to_string()))?.clone();
    let column = |name: &str| header.iter().position(|h| h.trim() == name);
    let observed_col = column("observed").ok_or_else(|| data_err(1, "missing required column 'observed'".into()))?;
    let mean_col = column("mean");
    let t_col = column("t");

    let mut observed = Vec::new();
    let mut mean = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| parse_field(&record[i]).map_err(|m| data_err(line, m));
        if let Some(i) = t_col {
            let expected = observed.len() + 1;
            if record[i].trim().parse::<usize>().ok() != Some(expected) {
                return Err(data_err(line, format!("expected t = {expected}, found '{}'", &record[i])));
            }
        }
        observed.push(field(observed_col)?);
        if let Some(i) = mean_col {
            mean.push(field(i)?);
        }
    }
    if observed.is_empty() {
        return Err(data_err(1, "no data rows".into()));
    }
    let mean = match mean_col {
        None => None,
        Some(_) if mean.iter().all(Option::is_none) => None,
        Some(_) => Some(
            mean.into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| data_err(i as u64 + 2, "mean column has a missing value".into())))
                .collect::<CliResult<Vec<f64>>>()?,
        ),
    };
    Ok(SeriesTable { observed, mean })
}
