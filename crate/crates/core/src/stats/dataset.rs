use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An `n x p` table of observations with column names. Stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    /// Validates shape, finiteness and that every column varies.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::input(format!("{} names for {} columns", names.len(), columns.len())));
        }
        let n = columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::input(format!("column {name} has {} rows, expected {n}", col.len())));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("column {name} has a missing or non-finite value")));
            }
            if n < 2 || sample_variance(col) <= 0.0 {
                return Err(Error::input(format!("column {name} has zero sample variance")));
            }
        }
        Ok(Dataset { names, columns })
    }

    pub(crate) fn from_columns_unchecked(names: Vec<String>, columns: Vec<Vec<f64>>) -> Self {
        Dataset { names, columns }
    }

    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Parses a header row of names followed by one row per observation.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("dataset header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        if names.is_empty() || names.iter().any(String::is_empty) {
            return Err(Error::Parse("dataset header has an empty column name".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("dataset row {}: {e}", row + 1)))?;
            if rec.len() != names.len() {
                return Err(Error::Parse(format!(
                    "dataset row {} has {} fields, expected {}",
                    row + 1,
                    rec.len(),
                    names.len()
                )));
            }
            for (col, field) in columns.iter_mut().zip(rec.iter()) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("dataset row {}: {field:?} is not a number", row + 1)))?;
                col.push(v);
            }
        }
        Self::from_columns(names, columns)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Writes the header and rows using the shortest round-tripping float format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.names).map_err(io)?;
        let mut row = Vec::with_capacity(self.p());
        for r in 0..self.n() {
            row.clear();
            row.extend(self.columns.iter().map(|c| c[r].to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}
