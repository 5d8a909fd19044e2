//! Univariate series with an explicit missing marker.
//!
//! Time is indexed from 1, so `series.at(t)` for `t` in `1..=series.len()`
//! returns the observation X(t).

use crate::error::{Error, Result};
use crate::num::Real;

/// A sequence of optionally observed values indexed by t = 1..T.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<Option<T>>,
}

impl<T: Real> TimeSeries<T> {
    /// Builds a series, rejecting empty input and non-finite observations.
    pub fn new(values: Vec<Option<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(pos) = values.iter().position(|v| v.is_some_and(|x| !x.finite())) {
            return Err(Error::NonFinite { t: pos + 1 });
        }
        Ok(Self { values })
    }

    /// A fully observed series.
    pub fn dense(values: Vec<T>) -> Result<Self> {
        Self::new(values.into_iter().map(Some).collect())
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> T) -> Result<Self> {
        Self::dense((1..=len).map(f).collect())
    }

    /// Number of time steps T.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observation at 1-based time `t`, `None` when missing.
    ///
    /// Panics if `t` is zero or beyond the end of the series.
    pub fn at(&self, t: usize) -> Option<T> {
        assert!(t >= 1 && t <= self.values.len(), "time index {t} outside 1..={}", self.values.len());
        self.values[t - 1]
    }

    /// Like [`at`](Self::at) but returns `None` for out-of-range indices too.
    pub fn get(&self, t: usize) -> Option<T> {
        if t == 0 {
            return None;
        }
        self.values.get(t - 1).copied().flatten()
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Option<T>> {
        self.values
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_dense(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// The values as a dense vector, or `None` if anything is missing.
    pub fn to_dense(&self) -> Option<Vec<T>> {
        self.values.iter().copied().collect()
    }

    /// The first `len` time steps.
    pub fn head(&self, len: usize) -> Result<Self> {
        Self::new(self.values[..len.min(self.values.len())].to_vec())
    }

    /// Iterates over `(t, value)` pairs with 1-based `t`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Option<T>)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| (i + 1, *v))
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self { values: self.values.iter().map(|v| v.map(&mut f)).collect() }
    }
}

/// A dense stretch of a series starting at 1-based index `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSegment<T> {
    pub start: usize,
    pub values: Vec<T>,
}

impl<T: Copy> SeriesSegment<T> {
    /// Last covered 1-based index.
    pub fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    pub fn get(&self, t: usize) -> Option<T> {
        t.checked_sub(self.start).and_then(|i| self.values.get(i).copied())
    }
}
