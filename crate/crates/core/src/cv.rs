//! Hold-out selection of the threshold multiplier μ and segment length L.
//!
//! * Imputation: 30% of the observed entries are hidden i.i.d., the rest is
//!   imputed and the hidden entries are scored.
//! * Forecasting: the first 70% of the series trains the model, the last
//!   30% is scored with one-step-ahead forecasts.
//!
//! Scores are RMSE against the raw held-out observations. Ties go to the
//! smaller L, then the smaller μ.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{Clip, UsvtConfig, UsvtFactors};
use crate::forecast::ForecastModel;
use crate::generators::index_rng;
use crate::impute::default_segment_length;
use crate::num::Real;
use crate::page::{page_columns, PageMatrix};
use crate::series::TimeSeries;

/// Fraction of the data held out for validation.
pub const HOLDOUT_FRACTION: f64 = 0.3;

const CV_STREAM: u64 = 0x6376_0000_0000_0003;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    ImputationRmse,
    ForecastRmse,
}

/// Candidate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid<T> {
    pub mu_candidates: Vec<T>,
    pub l_candidates: Vec<usize>,
    pub objective: Objective,
    pub seed: u64,
    /// Defaults to the observed range for imputation and off for forecasting.
    pub clip: Clip<T>,
}

impl<T: Real> CvGrid<T> {
    pub fn new(mu_candidates: Vec<T>, l_candidates: Vec<usize>, objective: Objective, seed: u64) -> Result<Self> {
        if mu_candidates.is_empty() || l_candidates.is_empty() {
            return Err(Error::InvalidParameter("cross-validation grid needs at least one mu and one L".into()));
        }
        if let Some(mu) = mu_candidates.iter().find(|m| !(m.finite() && **m >= T::zero())) {
            return Err(Error::InvalidParameter(format!("mu candidate {mu} must be finite and >= 0")));
        }
        if let Some(l) = l_candidates.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidParameter(format!("L candidate {l} must be >= 2")));
        }
        let clip = match objective {
            Objective::ImputationRmse => Clip::ObservedRange,
            Objective::ForecastRmse => Clip::Off,
        };
        Ok(Self { mu_candidates, l_candidates, objective, seed, clip })
    }

    /// μ ∈ {0.1, 0.2, …, 3.0} and L ∈ {ℓ/2, ℓ, 2ℓ} with ℓ = ⌊T^{1/3}⌋.
    pub fn default_for(len: usize, objective: Objective, seed: u64) -> Self {
        let mus = (1..=30).map(|i| T::of(i as f64 / 10.0)).collect();
        Self::new(mus, default_l_candidates(len), objective, seed).expect("default grid is valid")
    }

    pub fn with_clip(mut self, clip: Clip<T>) -> Self {
        self.clip = clip;
        self
    }
}

/// {ℓ/2, ℓ, 2ℓ} with ℓ = ⌊T^{1/3}⌋, each at least 2, deduplicated.
pub fn default_l_candidates(len: usize) -> Vec<usize> {
    let base = default_segment_length(len);
    let mut ls = vec![(base / 2).max(2), base, 2 * base];
    ls.dedup();
    ls
}

/// One grid point. `score` is `None` when the candidate was infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow<T> {
    pub l: usize,
    pub mu: T,
    pub score: Option<T>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<T> {
    pub mu: T,
    pub l: usize,
    pub score: T,
    pub table: Vec<ScoreRow<T>>,
}

/// Grid search over (L, μ).
pub fn select_hyperparams<T: Real>(series: &TimeSeries<T>, grid: &CvGrid<T>) -> Result<CvOutcome<T>> {
    let per_l: Vec<Vec<ScoreRow<T>>> = match grid.objective {
        Objective::ImputationRmse => {
            let (train, hidden) = hide_for_validation(series, grid.seed)?;
            grid.l_candidates.par_iter().map(|&l| score_imputation(&train, &hidden, l, grid)).collect::<Result<_>>()?
        }
        Objective::ForecastRmse => {
            grid.l_candidates.par_iter().map(|&l| score_forecast(series, l, grid)).collect::<Result<_>>()?
        }
    };
    let table: Vec<ScoreRow<T>> = per_l.into_iter().flatten().collect();
    let best = table
        .iter()
        .filter_map(|r| r.score.map(|s| (s, r)))
        .min_by(|(a, ra), (b, rb)| {
            a.partial_cmp(b)
                .unwrap_or(Ordering::Equal)
                .then(ra.l.cmp(&rb.l))
                .then(ra.mu.partial_cmp(&rb.mu).unwrap_or(Ordering::Equal))
        })
        .map(|(s, r)| (s, r.l, r.mu));
    match best {
        Some((score, l, mu)) => Ok(CvOutcome { mu, l, score, table }),
        None => Err(Error::NoFeasibleCandidate(format!(
            "none of L = {:?} could be scored on a series of length {}",
            grid.l_candidates,
            series.len()
        ))),
    }
}

/// Reduced series and the hidden `(t, value)` pairs.
pub type Holdout<T> = (TimeSeries<T>, Vec<(usize, T)>);

/// Hides an i.i.d. 30% of the observed entries. Returns the reduced series
/// and the hidden `(t, value)` pairs.
pub fn hide_for_validation<T: Real>(series: &TimeSeries<T>, seed: u64) -> Result<Holdout<T>> {
    let mut hidden = Vec::new();
    let values = series
        .iter()
        .map(|(t, v)| match v {
            Some(x) if index_rng(seed, CV_STREAM, t).random::<f64>() < HOLDOUT_FRACTION => {
                hidden.push((t, x));
                None
            }
            other => other,
        })
        .collect();
    Ok((TimeSeries::new(values)?, hidden))
}

fn infeasible<T: Real>(l: usize, grid: &CvGrid<T>, why: String) -> Vec<ScoreRow<T>> {
    grid.mu_candidates.iter().map(|&mu| ScoreRow { l, mu, score: None, note: Some(why.clone()) }).collect()
}

fn score_imputation<T: Real>(
    train: &TimeSeries<T>,
    hidden: &[(usize, T)],
    l: usize,
    grid: &CvGrid<T>,
) -> Result<Vec<ScoreRow<T>>> {
    let n = page_columns(train.len(), l);
    if n < 2 {
        return Ok(infeasible(l, grid, format!("N = {n} < 2")));
    }
    let covered_end = l * n;
    let scored: Vec<_> = hidden.iter().filter(|(t, _)| *t <= covered_end).collect();
    if scored.is_empty() {
        return Ok(infeasible(l, grid, "no held-out entries in covered range".into()));
    }
    let factors = UsvtFactors::new(PageMatrix::build(train, l, 1)?.grid())?;
    grid.mu_candidates
        .iter()
        .map(|&mu| {
            let est = factors.estimate(&UsvtConfig::with_clip(mu, grid.clip)?);
            let sse = scored.iter().fold(T::zero(), |acc, &&(t, x)| {
                let e = est.m_hat[t - 1] - x;
                acc + e * e
            });
            let score = (sse / T::of_usize(scored.len())).sqrt();
            Ok(ScoreRow { l, mu, score: Some(score), note: None })
        })
        .collect()
}

/// Index where the forecast hold-out begins (first 70% trains).
pub fn train_split(len: usize) -> usize {
    ((len as f64) * (1.0 - HOLDOUT_FRACTION)).floor() as usize
}

fn score_forecast<T: Real>(series: &TimeSeries<T>, l: usize, grid: &CvGrid<T>) -> Result<Vec<ScoreRow<T>>> {
    let split = train_split(series.len());
    let n = page_columns(split, l);
    if n < 2 {
        return Ok(infeasible(l, grid, format!("N = {n} < 2 on the training part")));
    }
    let targets: Vec<(usize, T)> = ((split + 1)..=series.len()).filter_map(|t| series.at(t).map(|x| (t, x))).collect();
    if targets.is_empty() {
        return Ok(infeasible(l, grid, "no observed values in the hold-out".into()));
    }
    let train = series.head(split)?;
    grid.mu_candidates
        .iter()
        .map(|&mu| {
            let cfg = UsvtConfig::with_clip(mu, grid.clip)?;
            let model = match ForecastModel::fit(&train, l, &cfg, None) {
                Ok(m) => m,
                Err(e @ Error::EmptyShift { .. }) => {
                    return Ok(ScoreRow { l, mu, score: None, note: Some(e.to_string()) })
                }
                Err(e) => return Err(e),
            };
            let fc = model.forecast_range(series, split + 1, series.len())?;
            let sse = targets.iter().fold(T::zero(), |acc, &(t, x)| {
                let e = fc.get(t).expect("forecast covers hold-out") - x;
                acc + e * e
            });
            let score = (sse / T::of_usize(targets.len())).sqrt();
            Ok(ScoreRow { l, mu, score: Some(score), note: None })
        })
        .collect()
}
