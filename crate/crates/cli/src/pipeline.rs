//! Per-seed experiment runs. Each function is a pure function of the
//! configuration and the seed.

use tsme_core::cv::{default_l_candidates, train_split};
use tsme_core::{
    default_segment_length, impute, select_hyperparams, Clip, CvGrid, CvOutcome, ForecastModel, MaskSpec, MetricReport,
    Objective, Subset, TimeSeries, UsvtConfig,
};

use crate::config::{ExperimentConfig, LChoice, MuChoice, Source};
use crate::error::{CliError, CliResult};
use crate::table::{fmt_opt, fmt_real, read_series, Table};

pub const GENERATE_HEADER: &[&str] = &["t", "mean", "observed"];
pub const GENERATE_MULTI_HEADER: &[&str] = &["seed", "t", "mean", "observed"];
pub const IMPUTE_HEADER: &[&str] = &["seed", "t", "observed", "imputed", "covered", "mean"];
pub const FORECAST_HEADER: &[&str] = &["seed", "t", "observed", "forecast", "naive", "mean"];
pub const REPORT_HEADER: &[&str] = &["seed", "model", "subset", "n_points", "mse", "rmse", "r2"];
pub const CV_HEADER: &[&str] = &["seed", "L", "mu", "score", "selected", "note"];

/// Observations for one seed and, when known, the series they are centred on.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observed: TimeSeries<f64>,
    /// Ground truth in observation units (normalised for Poisson noise).
    pub mean: Option<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }
}

/// Draws or loads the data for `seed`. Noise and mask use independent
/// streams of the same seed.
pub fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> CliResult<Dataset> {
    load_with_scope(cfg, seed, MaskScope::Whole)
}

/// Which entries the observation mask may hide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskScope {
    Whole,
    /// The first 70% only, as in the forecasting protocol.
    TrainingPart,
}

pub fn load_with_scope(cfg: &ExperimentConfig, seed: u64, scope: MaskScope) -> CliResult<Dataset> {
    let mask = MaskSpec::new(cfg.p, seed)?;
    let (series, mean) = match &cfg.source {
        Source::Generator { spec, len } => {
            let mean = spec.generate_mean::<f64>(*len)?;
            let noisy = cfg.noise.apply(&mean, seed)?;
            let truth = cfg.noise.latent(&mean).to_dense().expect("generated mean is dense");
            (noisy, Some(truth))
        }
        Source::File(path) => {
            let table = read_series(path)?;
            (TimeSeries::new(table.observed)?, table.mean)
        }
    };
    if cfg.p >= 1.0 {
        return Ok(Dataset { observed: series, mean });
    }
    let mask_end = match scope {
        MaskScope::Whole => series.len(),
        MaskScope::TrainingPart => train_split(series.len()),
    };
    let values = series.iter().map(|(t, v)| v.filter(|_| t > mask_end || mask.keeps(t))).collect();
    Ok(Dataset { observed: TimeSeries::new(values)?, mean })
}

/// Segment length and threshold for one run, with the CV outcome when a
/// search was performed.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub l: usize,
    pub mu: f64,
    pub cv: Option<CvOutcome<f64>>,
}

/// The CV grid implied by the configuration for a series of length `len`.
pub fn cv_grid(cfg: &ExperimentConfig, len: usize, objective: Objective, seed: u64) -> CliResult<CvGrid<f64>> {
    let mus = match (&cfg.cv_mu, cfg.mu) {
        (_, MuChoice::Fixed(mu)) => vec![mu],
        (Some(mus), MuChoice::Cv) => mus.clone(),
        (None, MuChoice::Cv) => (1..=30).map(|i| i as f64 / 10.0).collect(),
    };
    let ls = match (&cfg.cv_l, cfg.l) {
        (_, LChoice::Fixed(l)) => vec![l],
        (Some(ls), LChoice::Auto) => ls.clone(),
        (None, LChoice::Auto) => default_l_candidates(len),
    };
    Ok(CvGrid::new(mus, ls, objective, cfg.cv_seed.unwrap_or(seed))?)
}

/// Resolves `L` and `mu`. A fixed `mu` with `L = auto` uses ⌊T^{1/3}⌋;
/// `mu = cv` searches the grid.
pub fn resolve_hyperparams(
    cfg: &ExperimentConfig,
    series: &TimeSeries<f64>,
    objective: Objective,
    seed: u64,
) -> CliResult<Hyperparams> {
    match (cfg.l, cfg.mu) {
        (LChoice::Fixed(l), MuChoice::Fixed(mu)) => Ok(Hyperparams { l, mu, cv: None }),
        (LChoice::Auto, MuChoice::Fixed(mu)) => {
            Ok(Hyperparams { l: default_segment_length(series.len()), mu, cv: None })
        }
        (_, MuChoice::Cv) => {
            let grid = cv_grid(cfg, series.len(), objective, seed)?;
            let outcome = select_hyperparams(series, &grid)?;
            Ok(Hyperparams { l: outcome.l, mu: outcome.mu, cv: Some(outcome) })
        }
    }
}

fn report_row(table: &mut Table, seed: u64, model: &str, r: &MetricReport) {
    table.push(vec![
        seed.to_string(),
        model.to_string(),
        r.subset.as_str().to_string(),
        r.n_points.to_string(),
        fmt_real(r.mse),
        fmt_real(r.rmse),
        fmt_real(r.r2),
    ]);
}

/// Adds a report row unless the subset selects no points.
fn push_report(
    table: &mut Table,
    seed: u64,
    model: &str,
    pred: &[f64],
    truth: &[f64],
    mask: &[bool],
    subset: Subset,
) -> CliResult<()> {
    if !mask.iter().any(|&m| m) {
        return Ok(());
    }
    let r = MetricReport::compute(pred, truth, Some(mask), subset)?;
    report_row(table, seed, model, &r);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Table,
    pub report: Table,
    pub hyper: Hyperparams,
}

pub fn generate_seed(cfg: &ExperimentConfig, seed: u64, with_seed: bool) -> CliResult<Table> {
    let data = load_dataset(cfg, seed)?;
    let mut table = Table::new(if with_seed { GENERATE_MULTI_HEADER } else { GENERATE_HEADER });
    for (t, v) in data.observed.iter() {
        let mut row = Vec::with_capacity(4);
        if with_seed {
            row.push(seed.to_string());
        }
        row.push(t.to_string());
        row.push(fmt_opt(data.mean.as_ref().map(|m| m[t - 1])));
        row.push(fmt_opt(v));
        table.push(row);
    }
    Ok(table)
}

/// Imputes the whole series. Scores the covered range (`all`) and the
/// missing entries inside it (`missing_only`) against the mean when known.
pub fn impute_seed(cfg: &ExperimentConfig, seed: u64) -> CliResult<RunOutput> {
    let data = load_dataset(cfg, seed)?;
    let hyper = resolve_hyperparams(cfg, &data.observed, Objective::ImputationRmse, seed)?;
    let out = impute(&data.observed, hyper.l, &UsvtConfig::new(hyper.mu)?)?;

    let mut rows = Table::new(IMPUTE_HEADER);
    for (t, v) in data.observed.iter() {
        rows.push(vec![
            seed.to_string(),
            t.to_string(),
            fmt_opt(v),
            fmt_opt(out.f_hat.at(t)),
            u8::from(out.is_covered(t)).to_string(),
            fmt_opt(data.mean.as_ref().map(|m| m[t - 1])),
        ]);
    }

    let mut report = Table::new(REPORT_HEADER);
    if let Some(mean) = &data.mean {
        let end = *out.covered.end();
        let pred: Vec<f64> = (1..=end).map(|t| out.f_hat.at(t).expect("covered range is estimated")).collect();
        let truth = &mean[..end];
        push_report(&mut report, seed, "usvt", &pred, truth, &vec![true; end], Subset::All)?;
        let missing: Vec<bool> = (1..=end).map(|t| data.observed.at(t).is_none()).collect();
        push_report(&mut report, seed, "usvt", &pred, truth, &missing, Subset::MissingOnly)?;
    }
    Ok(RunOutput { rows, report, hyper })
}

/// Last observed value strictly before each `t` in `t_from..=len`.
pub fn naive_last_value(series: &TimeSeries<f64>, t_from: usize) -> CliResult<Vec<f64>> {
    let mut last = (1..t_from).rev().find_map(|t| series.get(t)).ok_or_else(|| {
        CliError::DataError(format!("no observation before t = {t_from} for the last-value baseline"))
    })?;
    let mut out = Vec::with_capacity(series.len() + 1 - t_from);
    for t in t_from..=series.len() {
        out.push(last);
        if let Some(v) = series.at(t) {
            last = v;
        }
    }
    Ok(out)
}

/// Trains on the first 70% and forecasts the rest one step ahead. The mask
/// hides training entries only; test windows use the raw observations.
/// Scores against the mean when known, else against the observed test values.
pub fn forecast_seed(cfg: &ExperimentConfig, seed: u64) -> CliResult<RunOutput> {
    let data = load_with_scope(cfg, seed, MaskScope::TrainingPart)?;
    let len = data.len();
    let split = train_split(len);
    if split == 0 || split == len {
        return Err(CliError::Invalid(format!("series of length {len} is too short to split for forecasting")));
    }
    let train = data.observed.head(split)?;
    let hyper = resolve_hyperparams(cfg, &train, Objective::ForecastRmse, seed)?;
    let model = ForecastModel::fit(&train, hyper.l, &UsvtConfig::with_clip(hyper.mu, Clip::Off)?, None)?;
    let forecast = model.forecast_range(&data.observed, split + 1, len)?;
    let naive = naive_last_value(&data.observed, split + 1)?;

    let mut rows = Table::new(FORECAST_HEADER);
    for (i, t) in (split + 1..=len).enumerate() {
        rows.push(vec![
            seed.to_string(),
            t.to_string(),
            fmt_opt(data.observed.at(t)),
            fmt_real(forecast.values[i]),
            fmt_real(naive[i]),
            fmt_opt(data.mean.as_ref().map(|m| m[t - 1])),
        ]);
    }

    let (truth, mask): (Vec<f64>, Vec<bool>) = match &data.mean {
        Some(mean) => (mean[split..].to_vec(), vec![true; len - split]),
        None => (split + 1..=len).map(|t| data.observed.at(t).map_or((0.0, false), |v| (v, true))).unzip(),
    };
    let mut report = Table::new(REPORT_HEADER);
    push_report(&mut report, seed, "usvt", &forecast.values, &truth, &mask, Subset::ForecastHorizon)?;
    push_report(&mut report, seed, "last_value", &naive, &truth, &mask, Subset::ForecastHorizon)?;
    Ok(RunOutput { rows, report, hyper })
}

/// Runs the configured task for `seed`.
pub fn task_seed(cfg: &ExperimentConfig, seed: u64) -> CliResult<RunOutput> {
    match cfg.task {
        crate::config::Task::Forecast => forecast_seed(cfg, seed),
        crate::config::Task::Impute | crate::config::Task::HiddenState => impute_seed(cfg, seed),
    }
}

/// Score table for the configured task. Fixed `L` or `mu` pin that axis of
/// the grid. Forecast configurations search on the training part only.
pub fn cv_seed(cfg: &ExperimentConfig, seed: u64) -> CliResult<(Table, CvOutcome<f64>)> {
    let (series, objective) = match cfg.task {
        crate::config::Task::Forecast => {
            let data = load_with_scope(cfg, seed, MaskScope::TrainingPart)?;
            (data.observed.head(train_split(data.len()))?, Objective::ForecastRmse)
        }
        _ => (load_dataset(cfg, seed)?.observed, Objective::ImputationRmse),
    };
    let grid = cv_grid(cfg, series.len(), objective, seed)?;
    let outcome = select_hyperparams(&series, &grid)?;
    let mut table = Table::new(CV_HEADER);
    for row in &outcome.table {
        let selected = row.l == outcome.l && row.mu == outcome.mu;
        table.push(vec![
            seed.to_string(),
            row.l.to_string(),
            fmt_real(row.mu),
            fmt_opt(row.score),
            u8::from(selected).to_string(),
            row.note.clone().unwrap_or_default(),
        ]);
    }
    Ok((table, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Task;
    use tsme_core::{Component, GeneratorSpec, NoiseSpec, Trend};

    fn generated(len: usize) -> ExperimentConfig {
        let spec = GeneratorSpec::mixture(
            vec![
                Component::Harmonic { freq: 0.05, phase: 0.0, wrapper: tsme_core::Wrapper::Identity },
                Component::Trend(Trend::Log { coeff: 0.1 }),
            ],
            vec![1.0, 1.0],
        )
        .unwrap();
        ExperimentConfig { source: Source::Generator { spec, len }, seeds: vec![1], ..ExperimentConfig::default() }
    }

    #[test]
    fn full_observation_without_noise_is_the_mean() {
        let data = load_dataset(&generated(50), 3).unwrap();
        assert_eq!(data.observed.to_dense().unwrap(), data.mean.unwrap());
    }

    #[test]
    fn mask_and_noise_are_seeded() {
        let mut cfg = generated(200);
        cfg.p = 0.5;
        cfg.noise = NoiseSpec::Gaussian { sigma: 0.2 };
        assert_eq!(load_dataset(&cfg, 4).unwrap(), load_dataset(&cfg, 4).unwrap());
        assert_ne!(load_dataset(&cfg, 4).unwrap(), load_dataset(&cfg, 5).unwrap());
    }

    #[test]
    fn forecast_mask_spares_the_test_part() {
        let mut cfg = generated(300);
        cfg.p = 0.3;
        let data = load_with_scope(&cfg, 1, MaskScope::TrainingPart).unwrap();
        let split = train_split(300);
        assert!((1..=split).any(|t| data.observed.at(t).is_none()));
        assert!((split + 1..=300).all(|t| data.observed.at(t).is_some()));
    }

    #[test]
    fn identity_path_has_zero_error() {
        let mut cfg = generated(120);
        cfg.l = LChoice::Fixed(4);
        cfg.mu = MuChoice::Fixed(0.0);
        let out = impute_seed(&cfg, 0).unwrap();
        let bytes = String::from_utf8(out.report.to_bytes()).unwrap();
        let all = bytes.lines().nth(1).unwrap();
        assert!(all.starts_with("0,usvt,all,116,"), "{all}");
        let rmse: f64 = all.split(',').nth(5).unwrap().parse().unwrap();
        assert!(rmse < 1e-12);
        // No missing entries, so no missing_only row.
        assert_eq!(out.report.len(), 1);
    }

    #[test]
    fn auto_l_with_fixed_mu() {
        let mut cfg = generated(1000);
        cfg.mu = MuChoice::Fixed(1.0);
        let h =
            resolve_hyperparams(&cfg, &load_dataset(&cfg, 0).unwrap().observed, Objective::ImputationRmse, 0).unwrap();
        assert_eq!((h.l, h.mu, h.cv), (10, 1.0, None));
    }

    #[test]
    fn single_candidate_grid_echoes_candidate() {
        let mut cfg = generated(300);
        cfg.l = LChoice::Fixed(6);
        cfg.mu = MuChoice::Fixed(0.7);
        let (table, outcome) = cv_seed(&cfg, 2).unwrap();
        assert_eq!((outcome.l, outcome.mu), (6, 0.7));
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn naive_uses_last_observation_before_t() {
        let s = TimeSeries::new(vec![Some(1.0), Some(2.0), None, Some(4.0), None]).unwrap();
        assert_eq!(naive_last_value(&s, 3).unwrap(), vec![2.0, 2.0, 4.0]);
        let s = TimeSeries::new(vec![None, None, Some(1.0)]).unwrap();
        assert!(naive_last_value(&s, 2).is_err());
    }

    #[test]
    fn constant_series_forecasts_exactly() {
        let spec =
            GeneratorSpec::new(vec![Component::Lrf { alpha: 0.0, omega: 0.0, phi: 0.0, poly: vec![2.0] }]).unwrap();
        let cfg = ExperimentConfig {
            task: Task::Forecast,
            source: Source::Generator { spec, len: 200 },
            l: LChoice::Fixed(5),
            mu: MuChoice::Fixed(0.0),
            ..ExperimentConfig::default()
        };
        let out = forecast_seed(&cfg, 0).unwrap();
        let text = String::from_utf8(out.report.to_bytes()).unwrap();
        let usvt = text.lines().nth(1).unwrap();
        let rmse: f64 = usvt.split(',').nth(5).unwrap().parse().unwrap();
        assert!(rmse < 1e-12, "{usvt}");
        assert_eq!(out.rows.len(), 200 - train_split(200));
    }
}
