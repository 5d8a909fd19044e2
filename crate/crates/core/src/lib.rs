//! Imputation and forecasting of a univariate time series through matrix
//! estimation on its Page matrix.
//!
//! A series X(1..T) is cut into non-overlapping length-L segments stacked as
//! the columns of an L×N matrix. Matrix estimation (universal singular value
//! thresholding by default) fills in and de-noises that matrix, which yields
//! the imputed series. Forecasts regress the last row of each shifted Page
//! matrix on its de-noised remaining rows.
//!
//! All numerics are generic over [`Real`]; the `*64` and `*32` aliases fix
//! the scalar type.
//!
//! ```
//! use tsme_core::{impute, TimeSeries64, UsvtConfig};
//!
//! let f: Vec<Option<f64>> = (1..=300)
//!     .map(|t| if t % 7 == 0 { None } else { Some((t as f64 * 0.2).sin()) })
//!     .collect();
//! let series = TimeSeries64::new(f).unwrap();
//! let out = impute(&series, 6, &UsvtConfig::new(0.5).unwrap()).unwrap();
//! assert!(out.f_hat.at(7).is_some());
//! ```

pub mod cv;
pub mod error;
pub mod estimation;
pub mod forecast;
pub mod generators;
pub mod impute;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod num;
pub mod page;
pub mod series;

pub use cv::{select_hyperparams, CvGrid, CvOutcome, Objective, ScoreRow};
pub use error::{Error, Result};
pub use estimation::{estimate_p_hat, usvt, zero_fill, Clip, MatrixEstimate, MatrixEstimator, UsvtConfig, UsvtFactors};
pub use forecast::{shift_for_time, ForecastModel};
pub use generators::{apply_mask, apply_noise, Component, GeneratorSpec, MaskSpec, NoiseSpec, Trend, Wrapper};
pub use impute::{default_segment_length, impute, mse_relative, ImputationResult};
pub use linalg::{least_squares, pseudoinverse};
pub use matrix::ObservedMatrix;
pub use metrics::{matrix_mrse, matrix_mse, matrix_rmse, r_squared, rmse, MetricReport, Subset};
pub use num::Real;
pub use page::{flatten_imputed, PageMatrix};
pub use series::{SeriesSegment, TimeSeries};

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type PageMatrix64 = PageMatrix<f64>;
pub type PageMatrix32 = PageMatrix<f32>;
pub type ObservedMatrix64 = ObservedMatrix<f64>;
pub type ObservedMatrix32 = ObservedMatrix<f32>;
pub type UsvtConfig64 = UsvtConfig<f64>;
pub type UsvtConfig32 = UsvtConfig<f32>;
pub type MatrixEstimate64 = MatrixEstimate<f64>;
pub type MatrixEstimate32 = MatrixEstimate<f32>;
pub type ForecastModel64 = ForecastModel<f64>;
pub type ForecastModel32 = ForecastModel<f32>;
pub type ImputationResult64 = ImputationResult<f64>;
pub type ImputationResult32 = ImputationResult<f32>;
pub type CvGrid64 = CvGrid<f64>;
pub type CvGrid32 = CvGrid<f32>;
