//! Partially observed matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::num::Real;

/// An m×n grid whose cells are either observed reals or missing.
///
/// Storage is column-major, matching `nalgebra`. Cell indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Option<T>>,
}

impl<T: Real> ObservedMatrix<T> {
    /// Builds from column-major cell data.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Option<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch { expected: "at least 1x1".into(), found: format!("{rows}x{cols}") });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} cells", rows * cols),
                found: format!("{} cells", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from a list of rows.
    pub fn from_rows(rows: &[Vec<Option<T>>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} columns"),
                found: format!("{} columns", bad.len()),
            });
        }
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            for row in rows {
                data.push(row[j]);
            }
        }
        Self::from_column_major(m, n, data)
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), data: m.iter().map(|&x| Some(x)).collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.data[i + j * self.rows]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<T>) {
        self.data[i + j * self.rows] = value;
    }

    /// Cells in column-major order.
    pub fn cells(&self) -> &[Option<T>] {
        &self.data
    }

    pub fn observed_count(&self) -> usize {
        self.data.iter().filter(|c| c.is_some()).count()
    }

    /// Smallest and largest observed value, if any cell is observed.
    pub fn observed_range(&self) -> Option<(T, T)> {
        self.data.iter().flatten().fold(None, |acc, &x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
    }

    /// Dense copy, or an error if any cell is missing.
    pub fn to_dense(&self) -> Result<DMatrix<T>> {
        let cells: Option<Vec<T>> = self.data.iter().copied().collect();
        cells.map(|c| DMatrix::from_vec(self.rows, self.cols, c)).ok_or(Error::MissingEntries)
    }

    /// Splits off the last row: the (m−1)×n top block and row m.
    pub fn split_last_row(&self) -> Result<(ObservedMatrix<T>, Vec<Option<T>>)> {
        if self.rows < 2 {
            return Err(Error::DimensionMismatch {
                expected: "at least 2 rows".into(),
                found: format!("{} rows", self.rows),
            });
        }
        let top_rows = self.rows - 1;
        let mut top = Vec::with_capacity(top_rows * self.cols);
        let mut last = Vec::with_capacity(self.cols);
        for col in self.data.chunks(self.rows) {
            top.extend_from_slice(&col[..top_rows]);
            last.push(col[top_rows]);
        }
        Ok((Self { rows: top_rows, cols: self.cols, data: top }, last))
    }
}

/// Splits a dense matrix into its first m−1 rows and its last row.
pub fn split_dense_last_row<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let r = m.nrows();
    assert!(r >= 2, "need at least two rows to split");
    (m.rows(0, r - 1).into_owned(), m.row(r - 1).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns_agree() {
        let m = ObservedMatrix::from_rows(&[vec![Some(1.0), None], vec![Some(3.0), Some(4.0)]]).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 0), Some(3.0));
        assert_eq!(m.observed_count(), 3);
        assert_eq!(m.observed_range(), Some((1.0, 4.0)));
        assert_eq!(m.to_dense(), Err(Error::MissingEntries));
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = ObservedMatrix::<f64>::from_rows(&[vec![Some(1.0)], vec![]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn split_reassembles() {
        let rows = vec![vec![Some(1.0), Some(4.0)], vec![None, Some(5.0)], vec![Some(3.0), Some(6.0)]];
        let m = ObservedMatrix::from_rows(&rows).unwrap();
        let (top, last) = m.split_last_row().unwrap();
        assert_eq!(top, ObservedMatrix::from_rows(&rows[..2]).unwrap());
        assert_eq!(last, rows[2]);
    }
}
