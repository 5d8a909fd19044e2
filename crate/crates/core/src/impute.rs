//! Imputation and de-noising through the first Page matrix.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::estimation::MatrixEstimator;
use crate::num::Real;
use crate::page::PageMatrix;
use crate::series::TimeSeries;

/// Output of [`impute`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult<T: Real> {
    /// Estimates over `covered`; outside it the original observations.
    pub f_hat: TimeSeries<T>,
    /// 1-based indices `1..=L·N` that were estimated.
    pub covered: RangeInclusive<usize>,
    pub rank_retained: usize,
    pub p_hat: T,
}

impl<T: Real> ImputationResult<T> {
    pub fn is_covered(&self, t: usize) -> bool {
        self.covered.contains(&t)
    }
}

/// Default segment length ⌊T^{1/3}⌋ (at least 2), so that N ≈ L².
pub fn default_segment_length(len: usize) -> usize {
    let mut l = (len as f64).cbrt().floor() as usize;
    while (l + 1).pow(3) <= len {
        l += 1;
    }
    while l > 0 && l.pow(3) > len {
        l -= 1;
    }
    l.max(2)
}

/// Imputes and de-noises `series` with segment length `l`.
///
/// Observed entries inside the covered range are replaced by their estimates
/// as well; the uncovered tail is passed through unchanged.
pub fn impute<T: Real, E: MatrixEstimator<T> + ?Sized>(
    series: &TimeSeries<T>,
    l: usize,
    estimator: &E,
) -> Result<ImputationResult<T>> {
    let page = PageMatrix::build(series, l, 1)?;
    let est = estimator.estimate(page.grid())?;
    let covered = page.covered();
    let mut values: Vec<Option<T>> = est.m_hat.iter().map(|&v| Some(v)).collect();
    values.extend_from_slice(&series.values()[*covered.end()..]);
    Ok(ImputationResult {
        f_hat: TimeSeries::new(values)?,
        covered,
        rank_retained: est.rank_retained,
        p_hat: est.p_hat,
    })
}

/// Relative squared error ‖f̂ − f‖² / ‖f‖².
pub fn mse_relative<T: Real>(f_hat: &[T], f: &[T]) -> Result<T> {
    if f_hat.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", f.len()),
            found: format!("length {}", f_hat.len()),
        });
    }
    let norm: T = f.iter().map(|&x| x * x).fold(T::zero(), |a, b| a + b);
    if norm == T::zero() {
        return Err(Error::ZeroNorm);
    }
    let err = f_hat.iter().zip(f).map(|(&a, &b)| (a - b) * (a - b)).fold(T::zero(), |a, b| a + b);
    Ok(err / norm)
}
