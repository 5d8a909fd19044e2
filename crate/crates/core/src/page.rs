//! Page-matrix views of a time series.
//!
//! The k-th shifted Page matrix of a series X(1..T) with segment length L is
//! the L×N grid whose (i, j) cell (1-based) holds X(i + (j−1)L + (k−1)), with
//! N = ⌊T/L⌋ − 1. Every cell maps to a distinct time index; the last partial
//! block of the series is not represented.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::ObservedMatrix;
use crate::num::Real;
use crate::series::{SeriesSegment, TimeSeries};

/// An L×N Page matrix together with its shift.
#[derive(Debug, Clone, PartialEq)]
pub struct PageMatrix<T> {
    grid: ObservedMatrix<T>,
    shift: usize,
}

/// Number of columns N = ⌊T/L⌋ − 1 (zero when the series is too short).
pub fn page_columns(len: usize, l: usize) -> usize {
    (len / l.max(1)).saturating_sub(1)
}

/// 1-based series index held by 0-based cell (row, col) of the shift-`k` matrix.
#[inline]
pub fn cell_time_index(row: usize, col: usize, l: usize, k: usize) -> usize {
    row + 1 + col * l + (k - 1)
}

fn check_shape(len: usize, l: usize, k: usize) -> Result<usize> {
    if l < 2 {
        return Err(Error::SegmentLength { l });
    }
    if k == 0 || k > l {
        return Err(Error::Shift { k, l });
    }
    let n = page_columns(len, l);
    if n == 0 {
        return Err(Error::SeriesTooShort { len, l, needed: 2 * l });
    }
    Ok(n)
}

impl<T: Real> PageMatrix<T> {
    /// Builds the shift-`k` Page matrix of `series` with `l` rows.
    pub fn build(series: &TimeSeries<T>, l: usize, k: usize) -> Result<Self> {
        let n = check_shape(series.len(), l, k)?;
        // Column j is the contiguous run starting at (j-1)L + k.
        let start = k - 1;
        let data = series.values()[start..start + l * n].to_vec();
        Ok(Self { grid: ObservedMatrix::from_column_major(l, n, data)?, shift: k })
    }

    /// Segment length L.
    pub fn rows(&self) -> usize {
        self.grid.nrows()
    }

    /// Column count N.
    pub fn cols(&self) -> usize {
        self.grid.ncols()
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn grid(&self) -> &ObservedMatrix<T> {
        &self.grid
    }

    pub fn into_grid(self) -> ObservedMatrix<T> {
        self.grid
    }

    /// 1-based series index of 0-based cell `(row, col)`.
    pub fn time_index(&self, row: usize, col: usize) -> usize {
        cell_time_index(row, col, self.rows(), self.shift)
    }

    /// Range of series indices covered by this matrix.
    pub fn covered(&self) -> std::ops::RangeInclusive<usize> {
        self.shift..=self.shift + self.rows() * self.cols() - 1
    }

    /// Top (L−1)×N block and last row.
    pub fn split_rows(&self) -> (ObservedMatrix<T>, Vec<Option<T>>) {
        self.grid.split_last_row().expect("Page matrices have at least two rows")
    }

    /// Reads a fully observed Page matrix back into a series segment.
    pub fn flatten(&self) -> Result<SeriesSegment<T>> {
        flatten_imputed(&self.grid.to_dense()?, self.shift)
    }
}

/// Reads a dense grid back into the series segment it covers for shift `k`.
///
/// The inverse of [`PageMatrix::build`] on fully observed input: cell (i, j)
/// becomes the value at index i + (j−1)L + (k−1).
pub fn flatten_imputed<T: Real>(grid: &DMatrix<T>, k: usize) -> Result<SeriesSegment<T>> {
    if k == 0 || k > grid.nrows().max(1) {
        return Err(Error::Shift { k, l: grid.nrows() });
    }
    if grid.is_empty() {
        return Err(Error::DimensionMismatch { expected: "non-empty grid".into(), found: "0 cells".into() });
    }
    Ok(SeriesSegment { start: k, values: grid.as_slice().to_vec() })
}

/// Like [`flatten_imputed`] but for a grid that may still contain missing cells.
pub fn flatten_observed<T: Real>(grid: &ObservedMatrix<T>, k: usize) -> Result<SeriesSegment<T>> {
    flatten_imputed(&grid.to_dense()?, k)
}
