//! Error metrics for matrices and series.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::num::Real;

fn check_shapes<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", b.nrows(), b.ncols()),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if a.is_empty() {
        return Err(Error::DegenerateSubset("empty matrices"));
    }
    Ok(())
}

/// Mean squared entrywise difference.
pub fn matrix_mse<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<T> {
    check_shapes(a, b)?;
    Ok((a - b).norm_squared() / T::of_usize(a.len()))
}

pub fn matrix_rmse<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<T> {
    matrix_mse(a, b).map(|m| m.sqrt())
}

/// Max row sum error `(1/√n) · max_i ‖a_i − b_i‖₂`.
pub fn matrix_mrse<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<T> {
    check_shapes(a, b)?;
    let diff = a - b;
    let worst = diff.row_iter().map(|r| r.norm()).fold(T::zero(), |x, y| x.max(y));
    Ok(worst / T::of_usize(a.ncols()).sqrt())
}

/// Which points a [`MetricReport`] was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subset {
    All,
    MissingOnly,
    ForecastHorizon,
}

impl Subset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::MissingOnly => "missing_only",
            Subset::ForecastHorizon => "forecast_horizon",
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Subset::All),
            "missing_only" => Ok(Subset::MissingOnly),
            "forecast_horizon" => Ok(Subset::ForecastHorizon),
            other => Err(Error::InvalidParameter(format!("unknown subset '{other}'"))),
        }
    }
}

fn selected<'a, T: Real>(
    pred: &'a [T],
    truth: &'a [T],
    mask: Option<&'a [bool]>,
) -> Result<impl Iterator<Item = (T, T)> + Clone + 'a> {
    if pred.len() != truth.len() || mask.is_some_and(|m| m.len() != truth.len()) {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", truth.len()),
            found: format!("length {}", pred.len()),
        });
    }
    Ok(pred.iter().zip(truth).enumerate().filter(move |(i, _)| mask.is_none_or(|m| m[*i])).map(|(_, (&p, &t))| (p, t)))
}

/// Root mean squared error over the points selected by `mask`.
pub fn rmse<T: Real>(pred: &[T], truth: &[T], mask: Option<&[bool]>) -> Result<T> {
    let (sum, n) =
        selected(pred, truth, mask)?.fold((T::zero(), 0usize), |(s, n), (p, t)| (s + (p - t) * (p - t), n + 1));
    if n == 0 {
        return Err(Error::DegenerateSubset("no points selected"));
    }
    Ok((sum / T::of_usize(n)).sqrt())
}

/// Coefficient of determination `1 − SS_res / SS_tot` over the points
/// selected by `mask`. May be negative.
pub fn r_squared<T: Real>(pred: &[T], truth: &[T], mask: Option<&[bool]>) -> Result<T> {
    let points = selected(pred, truth, mask)?;
    let (sum, n) = points.clone().fold((T::zero(), 0usize), |(s, n), (_, t)| (s + t, n + 1));
    if n == 0 {
        return Err(Error::DegenerateSubset("no points selected"));
    }
    let mean = sum / T::of_usize(n);
    let (ss_res, ss_tot) =
        points.fold((T::zero(), T::zero()), |(r, s), (p, t)| (r + (p - t) * (p - t), s + (t - mean) * (t - mean)));
    if ss_tot == T::zero() {
        return Err(Error::DegenerateSubset("truth is constant on the subset"));
    }
    Ok(T::one() - ss_res / ss_tot)
}

/// RMSE, MSE and R² over one subset of points.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub mse: f64,
    /// `NaN` when the truth is constant on the subset.
    pub r2: f64,
    pub n_points: usize,
    pub subset: Subset,
}

impl MetricReport {
    pub fn compute<T: Real>(pred: &[T], truth: &[T], mask: Option<&[bool]>, subset: Subset) -> Result<Self> {
        let rmse = rmse(pred, truth, mask)?.as_f64();
        let n_points = selected(pred, truth, mask)?.count();
        let r2 = match r_squared(pred, truth, mask) {
            Ok(r) => r.as_f64(),
            Err(Error::DegenerateSubset(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        Ok(Self { rmse, mse: rmse * rmse, r2, n_points, subset })
    }
}
