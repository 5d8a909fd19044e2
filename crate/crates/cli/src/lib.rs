//! Batch front end for `tsme-core`: experiment configuration, data
//! ingestion, the 70/30 evaluation protocol and CSV emission.
//!
//! Every command is a deterministic function of the configuration file and
//! the seeds. Seeds run in parallel and their outputs are merged in seed
//! order.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{parse_l, parse_mu, ExperimentConfig, LChoice, MuChoice, Task};
use crate::error::{CliError, CliResult};
use crate::pipeline::RunOutput;
use crate::table::Table;

#[derive(Debug, Parser)]
#[command(name = "tsme", version, about = "Time series imputation and forecasting via Page-matrix estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Segment length: an integer >= 2 or `auto`.
    #[arg(long = "L", value_name = "INT|auto", value_parser = l_arg)]
    pub l: Option<LChoice>,
    /// Threshold multiplier: a real >= 0 or `cv`.
    #[arg(long, value_name = "FLOAT|cv", value_parser = mu_arg)]
    pub mu: Option<MuChoice>,
    /// Observation probability in (0, 1].
    #[arg(long)]
    pub p: Option<f64>,
}

fn l_arg(s: &str) -> Result<LChoice, String> {
    parse_l(s).ok_or_else(|| format!("expected an integer >= 2 or 'auto', found '{s}'"))
}

fn mu_arg(s: &str) -> Result<MuChoice, String> {
    parse_mu(s).ok_or_else(|| format!("expected a real >= 0 or 'cv', found '{s}'"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic series: t, mean, observed.
    Generate(CommonArgs),
    /// Impute and de-noise; writes the series and a metric report.
    Impute(CommonArgs),
    /// Train on the first 70%, forecast the rest; writes forecasts and a report.
    Forecast(CommonArgs),
    /// Write the cross-validation score table and print the chosen (L, mu).
    Cv(CommonArgs),
    /// Run the configured task for every seed and write the merged report.
    Eval(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Generate(a) | Command::Impute(a) | Command::Forecast(a) | Command::Cv(a) | Command::Eval(a) => a,
        }
    }
}

/// Configuration with command-line overrides applied.
pub fn effective_config(args: &CommonArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(output) = &args.output {
        cfg.output = Some(output.clone());
    }
    if let Some(l) = args.l {
        cfg.l = l;
    }
    if let Some(mu) = args.mu {
        cfg.mu = mu;
    }
    if let Some(p) = args.p {
        if !(p > 0.0 && p <= 1.0) {
            return Err(CliError::Usage(format!("--p {p} outside (0, 1]")));
        }
        cfg.p = p;
    }
    Ok(cfg)
}

/// Sizes the global thread pool from `TSME_THREADS` (unset or 0: automatic).
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TSME_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("TSME_THREADS must be a non-negative integer, found '{raw}'")))?;
    if n > 0 {
        // A pool that is already initialised keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn per_seed<R: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(&ExperimentConfig, u64) -> CliResult<R> + Sync,
) -> CliResult<Vec<R>> {
    cfg.seeds.par_iter().map(|&seed| f(cfg, seed)).collect()
}

fn merge(header: &[&'static str], parts: impl IntoIterator<Item = Table>) -> Table {
    let mut out = Table::new(header);
    for t in parts {
        out.extend(t);
    }
    out
}

fn emit(table: &Table, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => table.write(p),
        None => stdout.write_all(&table.to_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// `<dir>/<stem>.report.csv` next to `output`.
pub fn default_report_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.report.csv"))
}

fn run_with_report(
    cfg: &ExperimentConfig,
    header: &[&'static str],
    run: impl Fn(&ExperimentConfig, u64) -> CliResult<RunOutput> + Sync,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let outputs = per_seed(cfg, run)?;
    let mut rows = Table::new(header);
    let mut report = Table::new(pipeline::REPORT_HEADER);
    for out in outputs {
        rows.extend(out.rows);
        report.extend(out.report);
    }
    emit(&rows, cfg.output.as_deref(), stdout)?;
    let report_path = cfg.report.clone().or_else(|| cfg.output.as_deref().map(default_report_path));
    if let Some(path) = report_path {
        report.write(&path)?;
    }
    Ok(())
}

/// Executes one command, writing tables to files or to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = effective_config(cli.command.args())?;
    match &cli.command {
        Command::Generate(_) => {
            let multi = cfg.seeds.len() > 1;
            let header = if multi { pipeline::GENERATE_MULTI_HEADER } else { pipeline::GENERATE_HEADER };
            let parts = per_seed(&cfg, |c, s| pipeline::generate_seed(c, s, multi))?;
            emit(&merge(header, parts), cfg.output.as_deref(), stdout)
        }
        Command::Impute(_) => {
            if cfg.task == Task::Forecast {
                cfg.task = Task::Impute;
            }
            run_with_report(&cfg, pipeline::IMPUTE_HEADER, pipeline::impute_seed, stdout)
        }
        Command::Forecast(_) => {
            cfg.task = Task::Forecast;
            run_with_report(&cfg, pipeline::FORECAST_HEADER, pipeline::forecast_seed, stdout)
        }
        Command::Cv(_) => {
            let results = per_seed(&cfg, pipeline::cv_seed)?;
            let mut table = Table::new(pipeline::CV_HEADER);
            let mut chosen = String::new();
            for (seed, (t, outcome)) in cfg.seeds.iter().zip(results) {
                table.extend(t);
                chosen.push_str(&format!("seed={seed} L={} mu={} score={}\n", outcome.l, outcome.mu, outcome.score));
            }
            match cfg.output.as_deref() {
                Some(p) => {
                    table.write(p)?;
                    stdout.write_all(chosen.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
                }
                None => emit(&table, None, stdout),
            }
        }
        Command::Eval(_) => {
            let outputs = per_seed(&cfg, pipeline::task_seed)?;
            let report = merge(pipeline::REPORT_HEADER, outputs.into_iter().map(|o| o.report));
            emit(&report, cfg.output.as_deref(), stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_path_sits_next_to_output() {
        assert_eq!(default_report_path(Path::new("/a/b/out.csv")), PathBuf::from("/a/b/out.report.csv"));
        assert_eq!(default_report_path(Path::new("run")), PathBuf::from("run.report.csv"));
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "tsme", "impute", "--config", "c", "--L", "auto", "--mu", "cv", "--p", "0.5", "--seed", "3",
        ])
        .unwrap();
        let a = cli.command.args();
        assert_eq!((a.l, a.mu, a.p, a.seed), (Some(LChoice::Auto), Some(MuChoice::Cv), Some(0.5), Some(3)));
        assert!(Cli::try_parse_from(["tsme", "impute", "--config", "c", "--L", "1"]).is_err());
        assert!(Cli::try_parse_from(["tsme", "impute"]).is_err());
    }
}
