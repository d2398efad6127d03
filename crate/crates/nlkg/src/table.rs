//! Named float columns and their CSV form.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 17 significant digits round-trip every double.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn index(&self, name: &str) -> CliResult<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| CliError::MissingColumn(name.into()))
    }

    pub fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_float(x)))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let columns = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Io(format!("not a number: {s}"))))
                .collect::<CliResult<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}
