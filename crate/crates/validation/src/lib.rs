//! Fixed experiment definitions used by the acceptance suite, and helpers
//! to run them over several seeds.

use rayon::prelude::*;

use tsme_cli::config::{ExperimentConfig, LChoice, MuChoice, Source, Task};
use tsme_cli::error::CliResult;
use tsme_cli::pipeline::RunOutput;
use tsme_cli::table::Table;
use tsme_core::{default_segment_length, Component, GeneratorSpec, NoiseSpec, Trend, Wrapper};

/// Seeds every multi-seed experiment is run with.
pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty(), "median of nothing");
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Metric `column` of the report row for (`model`, `subset`).
pub fn report_value(report: &Table, model: &str, subset: &str, column: &str) -> Option<f64> {
    let h = report.header();
    let idx = |name: &str| h.iter().position(|c| *c == name);
    let (m, s, c) = (idx("model")?, idx("subset")?, idx(column)?);
    report.rows().iter().find(|r| r[m] == model && r[s] == subset).and_then(|r| r[c].parse().ok())
}

/// Runs `run` for every seed in [`SEEDS`], in parallel, in seed order.
pub fn run_seeds(
    cfg: &ExperimentConfig,
    run: fn(&ExperimentConfig, u64) -> CliResult<RunOutput>,
) -> CliResult<Vec<RunOutput>> {
    SEEDS.par_iter().map(|&s| run(cfg, s)).collect()
}

pub fn generator_config(spec: GeneratorSpec, len: usize) -> ExperimentConfig {
    ExperimentConfig { source: Source::Generator { spec, len }, ..ExperimentConfig::default() }
}

/// λ(t) = 50 + 20 sin(2πt/500) + 10 sin(2πt/75 + 1) + 5 log t.
pub fn hidden_state_spec() -> GeneratorSpec {
    GeneratorSpec::mixture(
        vec![
            Component::Lrf { alpha: 0.0, omega: 0.0, phi: 0.0, poly: vec![1.0] },
            Component::Harmonic { freq: 1.0 / 500.0, phase: 0.0, wrapper: Wrapper::Identity },
            Component::Harmonic { freq: 1.0 / 75.0, phase: 1.0, wrapper: Wrapper::Identity },
            Component::Trend(Trend::Log { coeff: 1.0 }),
        ],
        vec![50.0, 20.0, 10.0, 5.0],
    )
    .expect("valid spec")
}

/// Counts min(Poisson(λ), 150) normalised so [0, 150] maps onto [−1, 1];
/// T = 25 050 with L = 50 gives a 50 × 500 Page matrix. μ by CV.
pub fn hidden_state_config(p: f64) -> ExperimentConfig {
    ExperimentConfig {
        task: Task::HiddenState,
        noise: NoiseSpec::PoissonTruncated { cap: 150.0, scale: 1.0 },
        p,
        l: LChoice::Fixed(50),
        mu: MuChoice::Cv,
        ..generator_config(hidden_state_spec(), 50 * 501)
    }
}

/// 0.7 sin(2πt/40) + 0.3 sin(2πt/13 + 0.7).
pub fn consistency_spec() -> GeneratorSpec {
    GeneratorSpec::mixture(
        vec![
            Component::Harmonic { freq: 1.0 / 40.0, phase: 0.0, wrapper: Wrapper::Identity },
            Component::Harmonic { freq: 1.0 / 13.0, phase: 0.7, wrapper: Wrapper::Identity },
        ],
        vec![0.7, 0.3],
    )
    .expect("valid spec")
}

/// Gaussian noise σ = 0.3, p = 0.5, L = ⌊T^{1/3}⌋, μ by CV.
pub fn consistency_config(len: usize) -> ExperimentConfig {
    ExperimentConfig {
        noise: NoiseSpec::Gaussian { sigma: 0.3 },
        p: 0.5,
        l: LChoice::Fixed(default_segment_length(len)),
        mu: MuChoice::Cv,
        ..generator_config(consistency_spec(), len)
    }
}

/// 0.6 sin(2πt/60) + 0.3 sin(2πt/23 + 0.4) + 0.01 √t.
pub fn robustness_spec() -> GeneratorSpec {
    GeneratorSpec::mixture(
        vec![
            Component::Harmonic { freq: 1.0 / 60.0, phase: 0.0, wrapper: Wrapper::Identity },
            Component::Harmonic { freq: 1.0 / 23.0, phase: 0.4, wrapper: Wrapper::Identity },
            Component::Trend(Trend::Power { exponent: 0.5, coeff: 0.01 }),
        ],
        vec![0.6, 0.3, 1.0],
    )
    .expect("valid spec")
}

/// T = 5000, Gaussian noise σ = 0.1, training entries observed with
/// probability `p`, L and μ by CV on the training part.
pub fn robustness_config(p: f64) -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Forecast,
        noise: NoiseSpec::Gaussian { sigma: 0.1 },
        p,
        mu: MuChoice::Cv,
        ..generator_config(robustness_spec(), 5000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsme_core::PageMatrix;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn report_lookup() {
        let mut t = Table::new(tsme_cli::pipeline::REPORT_HEADER);
        t.push(["0", "usvt", "all", "3", "0.25", "0.5", ""].map(String::from).to_vec());
        assert_eq!(report_value(&t, "usvt", "all", "rmse"), Some(0.5));
        assert_eq!(report_value(&t, "usvt", "all", "r2"), None);
        assert_eq!(report_value(&t, "usvt", "missing_only", "rmse"), None);
    }

    #[test]
    fn hidden_state_page_matrix_is_50_by_500() {
        let cfg = hidden_state_config(1.0);
        let Source::Generator { spec, len } = &cfg.source else { unreachable!() };
        let f = spec.generate_mean::<f64>(*len).unwrap();
        let page = PageMatrix::build(&f, 50, 1).unwrap();
        assert_eq!((page.rows(), page.cols()), (50, 500));
        // The rate stays inside the truncation range.
        let rates = f.to_dense().unwrap();
        assert!(rates.iter().all(|&r| r > 0.0 && r < 150.0));
    }
}
