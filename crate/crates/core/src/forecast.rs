//! Forecasting by regressing the last Page-matrix row on the de-noised
//! remaining rows.
//!
//! For every shift k ∈ 1..=L the top (L−1)×N block of the shift-k Page
//! matrix is de-noised into M̃⁽ᵏ⁾, and β⁽ᵏ⁾ is the minimum-norm least-squares
//! solution of `X_L⁽ᵏ⁾ ≈ (M̃⁽ᵏ⁾)ᵀ β`. A target time t is routed to shift
//! k = (t mod L) + 1; its window v_t = X(t−L+1..t−1) is projected onto the
//! column space of M̃⁽ᵏ⁾ and the prediction is `(v_t^proj)ᵀ β⁽ᵏ⁾`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::MatrixEstimator;
use crate::linalg::{least_squares, ThinSvd};
use crate::num::Real;
use crate::page::{page_columns, PageMatrix};
use crate::series::{SeriesSegment, TimeSeries};

/// Per-shift regression model.
#[derive(Debug, Clone)]
pub struct ForecastModel<T: Real> {
    l: usize,
    n: usize,
    horizon: usize,
    pinv_tol: Option<T>,
    betas: Vec<DVector<T>>,
    features: Vec<DMatrix<T>>,
    /// `P_k β⁽ᵏ⁾` where `P_k` projects onto the column space of M̃⁽ᵏ⁾, so a
    /// forecast reduces to one dot product with the window.
    weights: Vec<DVector<T>>,
}

/// Shift serving target time `t`: k = (t mod L) + 1.
#[inline]
pub fn shift_for_time(t: usize, l: usize) -> usize {
    t % l + 1
}

struct ShiftFit<T: Real> {
    beta: DVector<T>,
    features: DMatrix<T>,
    weights: DVector<T>,
}

fn fit_shift<T: Real, E: MatrixEstimator<T> + ?Sized>(
    series: &TimeSeries<T>,
    l: usize,
    k: usize,
    estimator: &E,
    pinv_tol: Option<T>,
) -> Result<ShiftFit<T>> {
    let page = PageMatrix::build(series, l, k)?;
    let (top, last) = page.split_rows();
    let features = estimator.estimate(&top)?.m_hat;

    // Columns whose target is missing are dropped from the regression.
    let observed: Vec<usize> = (0..last.len()).filter(|&j| last[j].is_some()).collect();
    if observed.is_empty() {
        return Err(Error::EmptyShift { k });
    }
    let design = features.select_columns(observed.iter()).transpose();
    let target = DVector::from_iterator(observed.len(), observed.iter().map(|&j| last[j].unwrap()));
    let beta = least_squares(&design, &target, pinv_tol)?;

    let svd = ThinSvd::new(&features)?;
    let basis = svd.column_basis(svd.cutoff(pinv_tol));
    let weights = &basis * (basis.transpose() * &beta);
    Ok(ShiftFit { beta, features, weights })
}

impl<T: Real> ForecastModel<T> {
    /// Fits all L per-shift regressions on `series`.
    ///
    /// Clipping inside `estimator` breaks the low-rank structure of the
    /// features and can inflate β through spurious small singular values;
    /// [`Clip::Off`](crate::estimation::Clip::Off) is the intended setting.
    ///
    /// Shifts are fitted in parallel; the result does not depend on
    /// scheduling.
    pub fn fit<E: MatrixEstimator<T> + ?Sized>(
        series: &TimeSeries<T>,
        l: usize,
        estimator: &E,
        pinv_tol: Option<T>,
    ) -> Result<Self> {
        if l < 2 {
            return Err(Error::SegmentLength { l });
        }
        let n = page_columns(series.len(), l);
        if n < 2 {
            return Err(Error::SeriesTooShort { len: series.len(), l, needed: 3 * l });
        }
        let fits = (1..=l)
            .into_par_iter()
            .map(|k| fit_shift(series, l, k, estimator, pinv_tol))
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self {
            l,
            n,
            horizon: series.len(),
            pinv_tol,
            betas: Vec::with_capacity(l),
            features: Vec::with_capacity(l),
            weights: Vec::with_capacity(l),
        };
        for f in fits {
            model.betas.push(f.beta);
            model.features.push(f.features);
            model.weights.push(f.weights);
        }
        Ok(model)
    }

    /// Segment length L.
    pub fn segment_length(&self) -> usize {
        self.l
    }

    /// Columns N per Page matrix.
    pub fn columns(&self) -> usize {
        self.n
    }

    /// Length of the training series.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pinv_tol(&self) -> Option<T> {
        self.pinv_tol
    }

    /// β⁽ᵏ⁾ for 1-based shift `k`.
    pub fn beta(&self, k: usize) -> &DVector<T> {
        &self.betas[k - 1]
    }

    /// De-noised (L−1)×N feature matrix M̃⁽ᵏ⁾ for 1-based shift `k`.
    pub fn features(&self, k: usize) -> &DMatrix<T> {
        &self.features[k - 1]
    }

    /// In-sample fit of the last row, `(M̃⁽ᵏ⁾)ᵀ β⁽ᵏ⁾`.
    pub fn fitted_last_row(&self, k: usize) -> DVector<T> {
        self.features(k).transpose() * self.beta(k)
    }

    /// De-noised in-sample estimate at 1-based time `t`, from shift 1.
    pub fn reconstruction(&self, t: usize) -> Option<T> {
        if t == 0 || t > self.l * self.n {
            return None;
        }
        let (row, col) = ((t - 1) % self.l, (t - 1) / self.l);
        if row + 1 < self.l {
            Some(self.features[0][(row, col)])
        } else {
            Some(self.features[0].column(col).dot(&self.betas[0]))
        }
    }

    /// One-step forecast for time `t` from the window X(t−L+1..t−1).
    pub fn forecast_one(&self, t: usize, window: &[T]) -> Result<T> {
        if window.len() != self.l - 1 {
            return Err(Error::DimensionMismatch {
                expected: format!("window of length {}", self.l - 1),
                found: format!("length {}", window.len()),
            });
        }
        if let Some(i) = window.iter().position(|v| !v.finite()) {
            return Err(Error::NonFinite { t: t + i + 1 - self.l });
        }
        let w = &self.weights[shift_for_time(t, self.l) - 1];
        Ok(w.iter().zip(window).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    /// Forecasts every time in `t_from..=t_to`.
    ///
    /// Windows use the raw observation where `series` has one. Otherwise a
    /// time at or after `t_from` uses its own earlier forecast, and a time
    /// before `t_from` uses the in-sample reconstruction when covered, else a
    /// forecast.
    pub fn forecast_range(&self, series: &TimeSeries<T>, t_from: usize, t_to: usize) -> Result<SeriesSegment<T>> {
        let l = self.l;
        if t_from <= l {
            return Err(Error::InvalidParameter(format!("forecast start t = {t_from} must exceed L = {l}")));
        }
        if t_to < t_from {
            return Err(Error::InvalidParameter(format!("empty forecast range {t_from}..={t_to}")));
        }
        let cover_end = l * self.n;
        let start = (t_from + 1 - l).min(cover_end + 1);
        let mut filled: Vec<T> = Vec::with_capacity(t_to + 1 - start);
        let mut out = Vec::with_capacity(t_to + 1 - t_from);
        let mut window = Vec::with_capacity(l - 1);

        for t in start..=t_to {
            let needs_forecast = t >= t_from || (series.get(t).is_none() && t > cover_end);
            let forecast = if needs_forecast {
                window.clear();
                for s in t + 1 - l..t {
                    let v = if s >= start {
                        filled[s - start]
                    } else {
                        series.get(s).or_else(|| self.reconstruction(s)).expect("index below start is covered")
                    };
                    window.push(v);
                }
                Some(self.forecast_one(t, &window)?)
            } else {
                None
            };
            let value = series
                .get(t)
                .or(if t < t_from { self.reconstruction(t) } else { None })
                .or(forecast)
                .expect("every index resolves to an observation, reconstruction or forecast");
            filled.push(value);
            if t >= t_from {
                out.push(forecast.expect("forecast computed for output range"));
            }
        }
        Ok(SeriesSegment { start: t_from, values: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::UsvtConfig;
    use approx::assert_relative_eq;

    fn cfg(mu: f64) -> UsvtConfig<f64> {
        UsvtConfig::new(mu).unwrap()
    }

    /// The literal α route: α = argmin ‖v − M̃α‖, prediction (M̃α)ᵀβ.
    fn explicit_forecast(model: &ForecastModel<f64>, t: usize, window: &[f64]) -> f64 {
        let k = shift_for_time(t, model.segment_length());
        let m = model.features(k);
        let v = DVector::from_column_slice(window);
        let alpha = least_squares(m, &v, model.pinv_tol()).unwrap();
        (m * alpha).dot(model.beta(k))
    }

    #[test]
    fn routing_example() {
        assert_eq!(shift_for_time(12, 5), 3);
    }

    #[test]
    fn routing_cycles_through_all_shifts() {
        let l = 7;
        for start in 1..30 {
            let mut seen: Vec<usize> = (start..start + l).map(|t| shift_for_time(t, l)).collect();
            seen.sort_unstable();
            assert_eq!(seen, (1..=l).collect::<Vec<_>>());
        }
    }

    #[test]
    fn constant_series() {
        let s = TimeSeries::from_fn(60, |_| 2.5).unwrap();
        let model = ForecastModel::fit(&s, 5, &cfg(0.0), None).unwrap();
        assert_relative_eq!(model.forecast_one(61, &[2.5; 4]).unwrap(), 2.5, epsilon = 1e-10);
        let seg = model.forecast_range(&s, 61, 80).unwrap();
        assert!(seg.values.iter().all(|v| (v - 2.5).abs() < 1e-10));
    }

    #[test]
    fn horizon_one_matches_forecast_one() {
        let s = TimeSeries::from_fn(90, |t| (t as f64 * 0.3).sin() + 0.01 * t as f64).unwrap();
        let model = ForecastModel::fit(&s, 6, &cfg(0.5), None).unwrap();
        let window: Vec<f64> = (86..=90).map(|t| s.at(t).unwrap()).collect();
        let seg = model.forecast_range(&s, 91, 91).unwrap();
        assert_eq!(seg.values, vec![model.forecast_one(91, &window).unwrap()]);
    }

    #[test]
    fn cached_weights_match_explicit_projection() {
        let s = TimeSeries::from_fn(200, |t| {
            let t = t as f64;
            (0.21 * t).cos() + 0.3 * (0.05 * t).sin() + 0.05 * ((t * 7.3).sin())
        })
        .unwrap();
        let model = ForecastModel::fit(&s, 8, &cfg(0.8), None).unwrap();
        for t in 201..215 {
            let window: Vec<f64> = (t - 7..t).map(|x| ((x as f64) * 0.11).cos()).collect();
            assert_relative_eq!(
                model.forecast_one(t, &window).unwrap(),
                explicit_forecast(&model, t, &window),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn missing_targets_are_dropped() {
        let mut v: Vec<Option<f64>> = (1..=60).map(|t| Some((t as f64 * 0.4).sin())).collect();
        // Knock out one last-row entry of shift 1 (t = 5).
        v[4] = None;
        let s = TimeSeries::new(v).unwrap();
        assert!(ForecastModel::fit(&s, 5, &cfg(0.0), None).is_ok());
    }

    #[test]
    fn shift_without_targets_is_an_error() {
        // Shift 1 of L = 4 uses t = 4, 8, 12, ... as targets.
        let v: Vec<Option<f64>> = (1..=40).map(|t| if t % 4 == 0 { None } else { Some(1.0) }).collect();
        let s = TimeSeries::new(v).unwrap();
        assert_eq!(ForecastModel::fit(&s, 4, &cfg(0.0), None).unwrap_err(), Error::EmptyShift { k: 1 });
    }

    #[test]
    fn rejects_short_series_and_early_start() {
        let s = TimeSeries::from_fn(11, |t| t as f64).unwrap();
        assert!(matches!(ForecastModel::fit(&s, 4, &cfg(0.0), None), Err(Error::SeriesTooShort { .. })));
        let s = TimeSeries::from_fn(40, |_| 1.0).unwrap();
        let model = ForecastModel::fit(&s, 4, &cfg(0.0), None).unwrap();
        assert!(model.forecast_range(&s, 4, 10).is_err());
        assert!(model.forecast_one(41, &[1.0; 2]).is_err());
    }

    #[test]
    fn gaps_before_start_are_reconstructed() {
        let mut v: Vec<Option<f64>> = (1..=100).map(|t| Some((t as f64 * 0.5).cos())).collect();
        for t in [95, 97, 99] {
            v[t - 1] = None;
        }
        let s = TimeSeries::new(v).unwrap();
        let model = ForecastModel::fit(&s, 5, &cfg(0.0), None).unwrap();
        // L·N = 95, so 95 is reconstructed while 97 and 99 are forecast first.
        let obs = |t: usize| s.at(t).unwrap();
        let r95 = model.reconstruction(95).unwrap();
        let f97 = model.forecast_one(97, &[obs(93), obs(94), r95, obs(96)]).unwrap();
        let f99 = model.forecast_one(99, &[r95, obs(96), f97, obs(98)]).unwrap();
        let f101 = model.forecast_one(101, &[f97, obs(98), f99, obs(100)]).unwrap();
        let seg = model.forecast_range(&s, 101, 103).unwrap();
        assert_eq!(seg.start, 101);
        assert_relative_eq!(seg.values[0], f101, epsilon = 1e-12);
        let f102 = model.forecast_one(102, &[obs(98), f99, obs(100), f101]).unwrap();
        assert_relative_eq!(seg.values[1], f102, epsilon = 1e-12);
    }
}
