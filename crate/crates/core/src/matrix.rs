use serde::{Deserialize, Serialize};

/// Dense row-major matrix of observations (one row per draw).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_rows(ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len() % ncols.max(1), 0, "data length not a multiple of ncols");
        let nrows = if ncols == 0 { 0 } else { data.len() / ncols };
        Self { nrows, ncols, data }
    }

    pub fn with_capacity(ncols: usize, nrows: usize) -> Self {
        Self {
            nrows: 0,
            ncols,
            data: Vec::with_capacity(ncols * nrows),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.ncols);
        self.data.extend_from_slice(row);
        self.nrows += 1;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.ncols.max(1)).take(self.nrows)
    }

    pub fn row_mut_iter(&mut self) -> impl Iterator<Item = &mut [f64]> + '_ {
        let n = self.nrows;
        self.data.chunks_exact_mut(self.ncols.max(1)).take(n)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::with_capacity(cols.len(), self.nrows);
        let mut buf = vec![0.0; cols.len()];
        for r in self.rows() {
            for (b, &c) in buf.iter_mut().zip(cols) {
                *b = r[c];
            }
            out.push_row(&buf);
        }
        out
    }
}
