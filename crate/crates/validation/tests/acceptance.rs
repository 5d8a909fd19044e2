//! Acceptance criteria. Each check prints one `PASS`/`FAIL` line; the test
//! fails if any criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use clap::Parser;
use nalgebra::DMatrix;
use rand::Rng;

use tsme_cli::config::{LChoice, MuChoice};
use tsme_cli::pipeline::{forecast_seed, impute_seed};
use tsme_cli::Cli;
use tsme_core::generators::{extend_by_recursion, index_rng};
use tsme_core::linalg::numerical_rank;
use tsme_core::{
    default_segment_length, matrix_mrse, matrix_rmse, mse_relative, pseudoinverse, rmse, Clip, Component,
    ForecastModel, GeneratorSpec, PageMatrix, TimeSeries, Trend, UsvtConfig, Wrapper,
};
use tsme_validation::{
    consistency_config, consistency_spec, generator_config, hidden_state_config, median, report_value,
    robustness_config, run_seeds,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

/// Page-matrix rank of random LRF mixtures stays within A(m+1)(m+2).
fn rank_bound() -> Outcome {
    let start = Instant::now();
    let mut worst = (0usize, 0usize);
    let mut violations = 0;
    for case in 0..50u64 {
        let mut rng = index_rng(case, 1, 0);
        let terms = rng.random_range(1..=3);
        let m_max = rng.random_range(0..=2usize);
        let components = (0..terms)
            .map(|i| {
                let degree = if i == 0 { m_max } else { rng.random_range(0..=m_max) };
                Component::Lrf {
                    alpha: rng.random_range(-1e-3..1e-3),
                    omega: rng.random_range(0.0..0.5),
                    phi: rng.random_range(0.0..std::f64::consts::TAU),
                    poly: (0..=degree).map(|d| rng.random_range(0.5..1.5) * 10f64.powi(-2 * d as i32)).collect(),
                }
            })
            .collect();
        let spec = GeneratorSpec::new(components).unwrap();
        let bound = spec.lrf_order_bound().unwrap();
        let l = bound + rng.random_range(1..=10);
        let f = spec.generate_mean::<f64>(l * 60).unwrap();
        let k = rng.random_range(1..=l);
        let grid = PageMatrix::build(&f, l, k).unwrap().grid().to_dense().unwrap();
        let rank = numerical_rank(&grid, 1e-8).unwrap();
        if rank > bound {
            violations += 1;
        }
        if rank * worst.1 >= worst.0 * bound {
            worst = (rank, bound);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, 30),
        format!("50 specs, {violations} violations, tightest rank {}/{} ({elapsed:.2?})", worst.0, worst.1),
    )
}

/// MRSE ≥ RMSE on random matrix pairs.
fn mrse_dominance() -> Outcome {
    let mut violations = 0;
    for case in 0..1000u64 {
        let mut rng = index_rng(case, 2, 0);
        let (r, c) = (rng.random_range(1..=20), rng.random_range(1..=20));
        let a = DMatrix::from_fn(r, c, |_, _| rng.random_range(-10.0..10.0));
        let b = DMatrix::from_fn(r, c, |_, _| rng.random_range(-10.0..10.0));
        let (mrse, rmse) = (matrix_mrse(&a, &b).unwrap(), matrix_rmse(&a, &b).unwrap());
        if mrse < rmse * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 pairs, {violations} violations"))
}

/// A A⁺ A = A and A⁺ A A⁺ = A⁺ to 1e-8 relative to the Frobenius norms.
fn moore_penrose() -> Outcome {
    let mut worst = 0.0f64;
    let mut deficient = 0;
    for case in 0..200u64 {
        let mut rng = index_rng(case, 3, 0);
        let (r, c): (usize, usize) = (rng.random_range(1..=20), rng.random_range(1..=15));
        let a = if case % 2 == 0 {
            DMatrix::<f64>::from_fn(r, c, |_, _| rng.random_range(-5.0..5.0))
        } else {
            deficient += 1;
            let k: usize = rng.random_range(1..=r.min(c));
            let left = DMatrix::<f64>::from_fn(r, k, |_, _| rng.random_range(-2.0..2.0));
            let right = DMatrix::<f64>::from_fn(k, c, |_, _| rng.random_range(-2.0..2.0));
            left * right
        };
        let p = pseudoinverse(&a, None).unwrap();
        let e1 = (&a * &p * &a - &a).norm() / a.norm().max(1.0);
        let e2 = (&p * &a * &p - &p).norm() / p.norm().max(1.0);
        worst = worst.max(e1).max(e2);
    }
    outcome(worst <= 1e-8, format!("200 matrices ({deficient} rank-deficient), worst relative residual {worst:.2e}"))
}

fn mixture() -> GeneratorSpec {
    GeneratorSpec::mixture(
        vec![
            Component::Harmonic { freq: 1.0 / 50.0, phase: 0.3, wrapper: Wrapper::Identity },
            Component::Lrf { alpha: 0.0, omega: 1.0 / 17.0, phi: 0.0, poly: vec![1.0, 1e-4] },
            Component::Trend(Trend::Log { coeff: 1.0 }),
        ],
        vec![1.0, 0.5, 0.2],
    )
    .unwrap()
}

/// p = 1, no noise, μ = 0: the imputation reproduces the input.
fn identity_path() -> Outcome {
    let mut cfg = generator_config(mixture(), 3000);
    cfg.mu = MuChoice::Fixed(0.0);
    cfg.l = LChoice::Auto;
    let out = impute_seed(&cfg, 0).unwrap();
    let imputed: Vec<f64> = out.rows.column("imputed").unwrap().map(|v| v.parse().unwrap()).collect();
    let observed: Vec<f64> = out.rows.column("observed").unwrap().map(|v| v.parse().unwrap()).collect();
    let covered = out.rows.column("covered").unwrap().filter(|c| *c == "1").count();
    let rel = mse_relative(&imputed[..covered], &observed[..covered]).unwrap().sqrt();
    outcome(rel <= 1e-10, format!("L = {}, {covered} covered entries, relative error {rel:.2e}", out.hyper.l))
}

/// Held-out one-step forecasts of noiseless LRFs match the recursion oracle.
fn noiseless_lrf() -> Outcome {
    let start = Instant::now();
    let specs = [
        ("order 2", vec![Component::Lrf { alpha: -1e-3, omega: 0.03, phi: 0.4, poly: vec![1.0] }]),
        ("order 4", vec![Component::Lrf { alpha: 0.0, omega: 0.021, phi: 1.0, poly: vec![1.0, 2e-3] }]),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, components) in specs {
        let spec = GeneratorSpec::new(components).unwrap();
        let coeffs = spec.lrf_coefficients().unwrap();
        let total = 2000;
        let f = spec.generate_mean::<f64>(total).unwrap().to_dense().unwrap();
        let oracle = extend_by_recursion(&coeffs, &f[..coeffs.len()], total);
        let series = TimeSeries::dense(f).unwrap();
        let split = tsme_core::cv::train_split(total);
        let l = default_segment_length(split);
        let model =
            ForecastModel::fit(&series.head(split).unwrap(), l, &UsvtConfig::with_clip(0.0, Clip::Off).unwrap(), None)
                .unwrap();
        let fc = model.forecast_range(&series, split + 1, total).unwrap();
        let truth = &oracle[split..];
        let rel = rmse(&fc.values, truth, None).unwrap() / rmse(truth, &vec![0.0; truth.len()], None).unwrap();
        pass &= coeffs.len() == name.trim_start_matches("order ").parse::<usize>().unwrap() && rel <= 1e-3;
        parts.push(format!("{name}: relative RMSE {rel:.2e}"));
    }
    let elapsed = start.elapsed();
    outcome(pass && within(elapsed, 10), format!("{} ({elapsed:.2?})", parts.join(", ")))
}

/// Hidden Poisson rate recovered from partial counts; 50 × 500 Page matrix.
fn hidden_state() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let cfg = hidden_state_config(p);
        // Nothing is missing at p = 1, so that run is scored on all entries.
        let subset = if p < 1.0 { "missing_only" } else { "all" };
        let outs = run_seeds(&cfg, impute_seed).unwrap();
        let rmse = median(outs.iter().map(|o| report_value(&o.report, "usvt", subset, "rmse").unwrap()).collect());
        let r2 = median(outs.iter().map(|o| report_value(&o.report, "usvt", subset, "r2").unwrap()).collect());
        pass &= rmse < 0.2 && r2 > 0.8;
        parts.push(format!("p={p}: rmse {rmse:.3} r2 {r2:.3}"));
    }
    let elapsed = start.elapsed();
    outcome(pass && within(elapsed, 300), format!("{} ({elapsed:.1?})", parts.join("; ")))
}

/// Relative imputation MSE decreases with T at L = ⌊T^{1/3}⌋.
fn consistency() -> Outcome {
    let start = Instant::now();
    let mut medians = Vec::new();
    for len in [4000, 16000, 64000] {
        let mean = consistency_spec().generate_mean::<f64>(len).unwrap().to_dense().unwrap();
        let cfg = consistency_config(len);
        let rel: Vec<f64> = run_seeds(&cfg, impute_seed)
            .unwrap()
            .iter()
            .map(|o| {
                let n = o.rows.column("covered").unwrap().filter(|c| *c == "1").count();
                let mse = report_value(&o.report, "usvt", "all", "mse").unwrap();
                mse * n as f64 / mean[..n].iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        medians.push((len, median(rel)));
    }
    let decreasing = medians.windows(2).all(|w| w[1].1 < w[0].1);
    let elapsed = start.elapsed();
    let parts: Vec<String> = medians.iter().map(|(t, m)| format!("T={t}: {m:.4}")).collect();
    outcome(decreasing && within(elapsed, 180), format!("{} ({elapsed:.1?})", parts.join(", ")))
}

/// Forecast RMSE no worse than the last-value baseline under missing data.
fn robustness() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.5, 0.7, 1.0] {
        let cfg = robustness_config(p);
        let outs = run_seeds(&cfg, forecast_seed).unwrap();
        let ours =
            median(outs.iter().map(|o| report_value(&o.report, "usvt", "forecast_horizon", "rmse").unwrap()).collect());
        let naive = median(
            outs.iter().map(|o| report_value(&o.report, "last_value", "forecast_horizon", "rmse").unwrap()).collect(),
        );
        pass &= ours <= naive;
        parts.push(format!("p={p}: {ours:.3} vs last value {naive:.3}"));
    }
    outcome(pass, format!("{} ({:.1?})", parts.join("; "), start.elapsed()))
}

/// Runs one command line in-process; returns what it wrote to stdout.
fn run_cli(args: &[&str]) -> Vec<u8> {
    let cli = Cli::try_parse_from(std::iter::once("tsme").chain(args.iter().copied())).expect("valid command line");
    let mut stdout = Vec::new();
    tsme_cli::run(&cli, &mut stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    stdout
}

/// Every command, run twice, writes byte-identical files and stdout.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let base = "T = 3000\ncomponent.0.kind = harmonic\ncomponent.0.freq = 0.02\ncomponent.1.kind = trend_log\n\
                component.1.weight = 0.1\nnoise = gaussian\nnoise.sigma = 0.3\np = 0.6\nseeds = 4, 1, 7\n";
    let impute_cfg = dir.path().join("impute.cfg");
    let forecast_cfg = dir.path().join("forecast.cfg");
    std::fs::write(&impute_cfg, base).unwrap();
    std::fs::write(&forecast_cfg, format!("task = forecast\n{base}")).unwrap();
    let runs: [(&str, &std::path::Path, &[&str]); 6] = [
        ("generate", &impute_cfg, &["gen.csv"]),
        ("impute", &impute_cfg, &["imp.csv", "imp.report.csv"]),
        ("forecast", &forecast_cfg, &["fc.csv", "fc.report.csv"]),
        ("cv", &impute_cfg, &["cv.csv"]),
        ("cv", &forecast_cfg, &["cvf.csv"]),
        ("eval", &forecast_cfg, &["eval.csv"]),
    ];
    let mut differing = Vec::new();
    let mut files = 0;
    for (cmd, cfg, outputs) in runs {
        let output = dir.path().join(outputs[0]);
        let mut snapshots = Vec::new();
        for _ in 0..2 {
            let mut snap =
                vec![run_cli(&[cmd, "--config", cfg.to_str().unwrap(), "--output", output.to_str().unwrap()])];
            for f in outputs {
                let path = dir.path().join(f);
                snap.push(std::fs::read(&path).unwrap());
                std::fs::remove_file(&path).unwrap();
            }
            snapshots.push(snap);
        }
        files += outputs.len();
        if snapshots[0] != snapshots[1] {
            differing.push(format!("{cmd} {}", cfg.display()));
        }
    }
    outcome(differing.is_empty(), format!("6 invocations, {files} files, differing: {differing:?}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Check); 9] = [
        ("rank bound of LRF Page matrices", rank_bound),
        ("MRSE dominates RMSE", mrse_dominance),
        ("Moore-Penrose identities", moore_penrose),
        ("identity path", identity_path),
        ("noiseless LRF forecasting", noiseless_lrf),
        ("hidden Poisson state", hidden_state),
        ("imputation consistency in T", consistency),
        ("forecasting under missing data", robustness),
        ("CLI determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let line = format!("{} criterion {}: {name}: {}\n", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        // Written past the test harness capture so the lines always show.
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
