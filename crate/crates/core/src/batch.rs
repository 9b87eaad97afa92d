//! Simulated batches and their CSV / JSON sidecar form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Metadata written next to a batch; enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub representation: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub data: Matrix,
    pub meta: BatchMeta,
}

impl SampleBatch {
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.data, out)
    }

    pub fn write_sidecar<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.meta)?;
        Ok(())
    }

    /// Writes `path` (CSV) and `path` with extension `.json` (sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        self.write_sidecar(std::fs::File::create(sidecar_path(path))?)?;
        Ok(())
    }
}

pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

/// CSV with header `x1..xd`; atoms are written as `-inf`.
pub fn write_csv<W: Write>(data: &Matrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=data.ncols()).map(|j| format!("x{j}")))?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    w.flush()?;
    Ok(())
}

fn format_value(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Reads a headed CSV of floats. Errors carry 1-based file line numbers.
pub fn read_csv<R: Read>(input: R) -> Result<Matrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let ncols = r.headers()?.len();
    let mut m = Matrix::with_capacity(ncols, 0);
    let mut row = Vec::with_capacity(ncols);
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if rec.len() != ncols {
            return Err(Error::Parse {
                line,
                message: format!("expected {ncols} fields, found {}", rec.len()),
            });
        }
        row.clear();
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Parse { line, message: format!("value out of range: {field:?}") });
            }
            row.push(v);
        }
        m.push_row(&row);
    }
    Ok(m)
}

pub fn read_csv_path(path: &Path) -> Result<Matrix> {
    read_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_atoms() {
        let m = Matrix::from_rows(2, vec![0.5, f64::NEG_INFINITY, -1.25, 3.0e-17]);
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2\n0.5,-inf\n"), "{text}");
        assert_eq!(read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn header_only_and_bad_rows() {
        let empty = Matrix::with_capacity(3, 0);
        let mut buf = Vec::new();
        write_csv(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2,x3\n");
        let err = read_csv("x1,x2\n1,2\n3,oops\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = read_csv("x1,x2\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }
}
