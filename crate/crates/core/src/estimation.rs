//! Matrix estimation: recover a mean matrix from a noisy, partially observed
//! one.
//!
//! The shipped estimator is universal singular value thresholding (USVT):
//!
//! ```text
//! Y      = X with missing cells set to 0
//! p̂      = max(#observed / mn, 1 / mn)
//! Y      = Σ σ_i u_i v_iᵀ
//! M̂      = (1/p̂) Σ_{σ_i ≥ μ √(max(m,n) p̂)} σ_i u_i v_iᵀ      (optionally clipped)
//! ```
//!
//! Other estimators plug into the imputer and forecaster through
//! [`MatrixEstimator`].

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::ThinSvd;
use crate::matrix::ObservedMatrix;
use crate::num::Real;

/// Estimated mean matrix and the statistics that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate<T: Real> {
    pub m_hat: DMatrix<T>,
    pub p_hat: T,
    pub rank_retained: usize,
}

/// A matrix estimation routine `ME(X) -> M̂`.
pub trait MatrixEstimator<T: Real>: Sync {
    fn estimate(&self, x: &ObservedMatrix<T>) -> Result<MatrixEstimate<T>>;
}

/// Entrywise clipping applied to the USVT output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clip<T> {
    /// Clip to `[min, max]` of the observed cells of the input.
    ObservedRange,
    /// Clip to a fixed `[low, high]`.
    Range(T, T),
    Off,
}

/// USVT parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsvtConfig<T> {
    /// Threshold multiplier μ ≥ 0.
    pub mu: T,
    pub clip: Clip<T>,
}

impl<T: Real> UsvtConfig<T> {
    /// Threshold `mu` with clipping to the observed range.
    pub fn new(mu: T) -> Result<Self> {
        Self::with_clip(mu, Clip::ObservedRange)
    }

    pub fn with_clip(mu: T, clip: Clip<T>) -> Result<Self> {
        if !(mu.finite() && mu >= T::zero()) {
            return Err(Error::InvalidParameter(format!("threshold multiplier mu = {mu} must be finite and >= 0")));
        }
        if let Clip::Range(lo, hi) = clip {
            if !matches!(lo.partial_cmp(&hi), Some(Ordering::Less | Ordering::Equal)) {
                return Err(Error::InvalidParameter(format!("clip range [{lo}, {hi}] is empty")));
            }
        }
        Ok(Self { mu, clip })
    }

    /// Singular value cutoff μ·√(max(m,n)·p̂).
    pub fn threshold(&self, rows: usize, cols: usize, p_hat: T) -> T {
        self.mu * (T::of_usize(rows.max(cols)) * p_hat).sqrt()
    }
}

/// Observed fraction p̂ = max(#observed/(mn), 1/(mn)).
pub fn estimate_p_hat<T: Real>(x: &ObservedMatrix<T>) -> T {
    let total = x.nrows() * x.ncols();
    T::of_usize(x.observed_count().max(1)) / T::of_usize(total)
}

/// Replaces missing cells by zero.
pub fn zero_fill<T: Real>(x: &ObservedMatrix<T>) -> DMatrix<T> {
    DMatrix::from_iterator(x.nrows(), x.ncols(), x.cells().iter().map(|c| c.unwrap_or_else(T::zero)))
}

/// Spectral factors of a zero-filled observation matrix.
///
/// Thresholding at different μ reuses one SVD, which is what the
/// cross-validation grid search relies on.
#[derive(Debug, Clone)]
pub struct UsvtFactors<T: Real> {
    svd: ThinSvd<T>,
    p_hat: T,
    observed_range: Option<(T, T)>,
}

impl<T: Real> UsvtFactors<T> {
    pub fn new(x: &ObservedMatrix<T>) -> Result<Self> {
        let svd = ThinSvd::new(&zero_fill(x))?;
        Ok(Self { svd, p_hat: estimate_p_hat(x), observed_range: x.observed_range() })
    }

    pub fn p_hat(&self) -> T {
        self.p_hat
    }

    pub fn singular_values(&self) -> &[T] {
        self.svd.singular_values.as_slice()
    }

    /// Thresholds, rescales and clips.
    pub fn estimate(&self, cfg: &UsvtConfig<T>) -> MatrixEstimate<T> {
        let (m, n) = (self.svd.nrows(), self.svd.ncols());
        let threshold = cfg.threshold(m, n, self.p_hat);
        // Ties at the threshold are retained; exact zeros never are.
        let (mut m_hat, rank_retained) =
            self.svd.reconstruct(T::one() / self.p_hat, |s| s >= threshold && s > T::zero());
        let bounds = match cfg.clip {
            Clip::ObservedRange => self.observed_range,
            Clip::Range(lo, hi) => Some((lo, hi)),
            Clip::Off => None,
        };
        if let Some((lo, hi)) = bounds {
            m_hat.apply(|v| *v = v.clamp(lo, hi));
        }
        MatrixEstimate { m_hat, p_hat: self.p_hat, rank_retained }
    }
}

/// Universal singular value thresholding.
pub fn usvt<T: Real>(x: &ObservedMatrix<T>, cfg: &UsvtConfig<T>) -> Result<MatrixEstimate<T>> {
    Ok(UsvtFactors::new(x)?.estimate(cfg))
}

impl<T: Real> MatrixEstimator<T> for UsvtConfig<T> {
    fn estimate(&self, x: &ObservedMatrix<T>) -> Result<MatrixEstimate<T>> {
        usvt(x, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(rows: &[&[Option<f64>]]) -> ObservedMatrix<f64> {
        ObservedMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn p_hat_examples() {
        let half = grid(&[&[Some(1.0), None, Some(2.0)], &[None, Some(3.0), None]]);
        assert_eq!(estimate_p_hat(&half), 0.5);
        let none = grid(&[&[None, None, None], &[None, None, None]]);
        assert_relative_eq!(estimate_p_hat(&none), 1.0 / 6.0);
        let full = grid(&[&[Some(1.0), Some(2.0)]]);
        assert_eq!(estimate_p_hat(&full), 1.0);
    }

    #[test]
    fn zero_fill_examples() {
        let x = grid(&[&[Some(1.0), None], &[None, Some(4.0)]]);
        assert_eq!(zero_fill(&x), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]));
        let full = grid(&[&[Some(1.0), Some(2.0)], &[Some(3.0), Some(4.0)]]);
        assert_eq!(zero_fill(&full), full.to_dense().unwrap());
        let empty = grid(&[&[None, None]]);
        assert_eq!(zero_fill(&empty), DMatrix::zeros(1, 2));
    }

    #[test]
    fn config_validation() {
        assert!(UsvtConfig::new(-1.0).is_err());
        assert!(UsvtConfig::new(f64::NAN).is_err());
        assert!(UsvtConfig::with_clip(1.0, Clip::Range(2.0, 1.0)).is_err());
        assert!(UsvtConfig::with_clip(1.0, Clip::Range(1.0, 1.0)).is_ok());
    }

    #[test]
    fn rank_one_identity_path() {
        let o = nalgebra::DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 1.0]);
        let m = &o * v.transpose() * 10.0;
        let est = usvt(&ObservedMatrix::from_dense(&m), &UsvtConfig::new(0.0).unwrap()).unwrap();
        assert!((&est.m_hat - &m).norm() / m.norm() < 1e-10);
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.rank_retained, 1);
    }

    #[test]
    fn zero_matrix_keeps_nothing() {
        let z = ObservedMatrix::from_dense(&DMatrix::<f64>::zeros(4, 3));
        for mu in [0.0, 1.0, 5.0] {
            let est = usvt(&z, &UsvtConfig::new(mu).unwrap()).unwrap();
            assert_eq!(est.rank_retained, 0);
            assert_eq!(est.m_hat, DMatrix::zeros(4, 3));
        }
    }

    #[test]
    fn fixed_clip_applies() {
        let m = DMatrix::from_row_slice(2, 2, &[5.0, -5.0, 1.0, 0.0]);
        let cfg = UsvtConfig::with_clip(0.0, Clip::Range(-1.0, 1.0)).unwrap();
        let est = usvt(&ObservedMatrix::from_dense(&m), &cfg).unwrap();
        assert!(est.m_hat.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
