//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # hidden-state run
//! task = hidden_state
//! T = 25050
//! component.0.kind = harmonic
//! component.0.freq = 0.002
//! component.0.weight = 20
//! noise = poisson
//! noise.cap = 150
//! p = 0.5
//! L = 50
//! mu = cv
//! seeds = 1, 2, 3
//! ```
//!
//! Component kinds and their keys:
//! `lrf` (alpha, omega, phi, poly), `harmonic` (freq, phase, wrapper,
//! wrapper_scale), `trend_power` (exponent, coeff), `trend_log` (coeff).
//! Every component also takes `weight` (default 1).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tsme_core::{Component, GeneratorSpec, NoiseSpec, Trend, Wrapper};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Impute,
    Forecast,
    HiddenState,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Impute => "impute",
            Task::Forecast => "forecast",
            Task::HiddenState => "hidden_state",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Generator { spec: GeneratorSpec, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LChoice {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuChoice {
    Cv,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub source: Source,
    pub p: f64,
    pub noise: NoiseSpec,
    pub l: LChoice,
    pub mu: MuChoice,
    pub cv_mu: Option<Vec<f64>>,
    pub cv_l: Option<Vec<usize>>,
    /// Validation seed; defaults to the run seed.
    pub cv_seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Impute,
            source: Source::File(PathBuf::new()),
            p: 1.0,
            noise: NoiseSpec::None,
            l: LChoice::Auto,
            mu: MuChoice::Cv,
            cv_mu: None,
            cv_l: None,
            cv_seed: None,
            seeds: vec![0],
            output: None,
            report: None,
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Parser<'a> {
    path: &'a str,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Parser<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Config { path: self.path.to_string(), line, message: message.into() }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&self, e: &Entry, key: &str, what: &str) -> CliResult<T> {
        e.value.parse().map_err(|_| self.err(e.line, format!("{key}: expected {what}, found '{}'", e.value)))
    }

    fn real(&mut self, key: &str) -> CliResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let v: f64 = self.parse(&e, key, "a real number")?;
                if !v.is_finite() {
                    return Err(self.err(e.line, format!("{key}: must be finite")));
                }
                Ok(Some(v))
            }
        }
    }

    fn real_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> CliResult<Option<Vec<T>>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let items = e
            .value
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse().map_err(|_| self.err(e.line, format!("{key}: expected a list of {what}, found '{s}'")))
            })
            .collect::<CliResult<Vec<T>>>()?;
        if items.is_empty() {
            return Err(self.err(e.line, format!("{key}: empty list")));
        }
        Ok(Some(items))
    }
}

/// Parses `L = <int|auto>`.
pub fn parse_l(s: &str) -> Option<LChoice> {
    match s.trim() {
        "auto" => Some(LChoice::Auto),
        other => other.parse().ok().filter(|&l: &usize| l >= 2).map(LChoice::Fixed),
    }
}

/// Parses `mu = <float|cv>`.
pub fn parse_mu(s: &str) -> Option<MuChoice> {
    match s.trim() {
        "cv" => Some(MuChoice::Cv),
        other => other.parse().ok().filter(|m: &f64| m.is_finite() && *m >= 0.0).map(MuChoice::Fixed),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }

    /// Parses configuration text. Relative `input`/`output`/`report` paths
    /// resolve against `base`.
    pub fn parse(text: &str, origin: &str, base: Option<&Path>) -> CliResult<Self> {
        let mut p = Parser { path: origin, entries: BTreeMap::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(p.err(line, format!("expected 'key = value', found '{content}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(p.err(line, "empty key"));
            }
            if let Some(prev) = p.entries.get(key) {
                return Err(p.err(line, format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            p.entries.insert(key.to_string(), Entry { line, value: value.to_string() });
        }

        let resolve = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        let mut cfg = ExperimentConfig::default();

        if let Some(e) = p.take("task") {
            cfg.task = match e.value.as_str() {
                "impute" => Task::Impute,
                "forecast" => Task::Forecast,
                "hidden_state" => Task::HiddenState,
                other => return Err(p.err(e.line, format!("task: unknown task '{other}'"))),
            };
        }

        let input = p.take("input");
        let len = p.take("T");
        let components = parse_components(&mut p)?;
        cfg.source = match (input, components) {
            (Some(e), None) => {
                if let Some(t) = len {
                    return Err(p.err(t.line, "T is only meaningful with a generator source"));
                }
                if e.value.is_empty() {
                    return Err(p.err(e.line, "input: empty path"));
                }
                Source::File(resolve(&e.value))
            }
            (None, Some((spec, line))) => {
                let Some(t) = len else { return Err(p.err(line, "generator source needs T")) };
                let n: usize = p.parse(&t, "T", "a positive integer")?;
                if n == 0 {
                    return Err(p.err(t.line, "T must be positive"));
                }
                Source::Generator { spec, len: n }
            }
            (Some(e), Some(_)) => return Err(p.err(e.line, "give either input or components, not both")),
            (None, None) => return Err(p.err(0, "no data source: set input or component.0.kind")),
        };

        if let Some(e) = p.take("p") {
            cfg.p = p.parse(&e, "p", "a probability")?;
            if !(cfg.p > 0.0 && cfg.p <= 1.0) {
                return Err(p.err(e.line, format!("p = {} outside (0, 1]", cfg.p)));
            }
        }

        let noise_line = p.entries.get("noise").map(|e| e.line);
        cfg.noise = match p.take("noise").map(|e| e.value) {
            None => NoiseSpec::None,
            Some(v) => match v.as_str() {
                "none" => NoiseSpec::None,
                "gaussian" => NoiseSpec::Gaussian { sigma: p.real_or("noise.sigma", 0.0)? },
                "poisson" => {
                    let Some(cap) = p.real("noise.cap")? else {
                        return Err(p.err(noise_line.unwrap_or(0), "poisson noise needs noise.cap"));
                    };
                    NoiseSpec::PoissonTruncated { cap, scale: p.real_or("noise.scale", 1.0)? }
                }
                other => return Err(p.err(noise_line.unwrap_or(0), format!("noise: unknown kind '{other}'"))),
            },
        };
        if let Err(e) = cfg.noise.validate() {
            return Err(p.err(noise_line.unwrap_or(0), e.to_string()));
        }
        if matches!(cfg.source, Source::File(_)) && cfg.noise != NoiseSpec::None {
            return Err(p.err(noise_line.unwrap_or(0), "noise applies to generated data only"));
        }
        if cfg.task == Task::HiddenState && !matches!(cfg.source, Source::Generator { .. }) {
            return Err(p.err(0, "hidden_state needs a generator source"));
        }

        if let Some(e) = p.take("L") {
            cfg.l = parse_l(&e.value)
                .ok_or_else(|| p.err(e.line, format!("L: expected an integer >= 2 or 'auto', found '{}'", e.value)))?;
        }
        if let Some(e) = p.take("mu") {
            cfg.mu = parse_mu(&e.value)
                .ok_or_else(|| p.err(e.line, format!("mu: expected a real >= 0 or 'cv', found '{}'", e.value)))?;
        }
        let mu_line = p.entries.get("cv.mu").map(|e| e.line);
        cfg.cv_mu = p.list("cv.mu", "reals")?;
        if let Some(mus) = &cfg.cv_mu {
            if mus.iter().any(|m: &f64| !(m.is_finite() && *m >= 0.0)) {
                return Err(p.err(mu_line.unwrap_or(0), "cv.mu: candidates must be finite and >= 0"));
            }
        }
        let l_line = p.entries.get("cv.L").map(|e| e.line);
        cfg.cv_l = p.list("cv.L", "integers")?;
        if cfg.cv_l.as_ref().is_some_and(|ls| ls.iter().any(|&l| l < 2)) {
            return Err(p.err(l_line.unwrap_or(0), "cv.L: candidates must be >= 2"));
        }
        if let Some(e) = p.take("cv.seed") {
            cfg.cv_seed = Some(p.parse(&e, "cv.seed", "an unsigned integer")?);
        }
        if let Some(seeds) = p.list("seeds", "unsigned integers")? {
            cfg.seeds = seeds;
        }
        cfg.output = p.take("output").map(|e| resolve(&e.value));
        cfg.report = p.take("report").map(|e| resolve(&e.value));

        if let Some((key, e)) = p.entries.iter().next() {
            return Err(p.err(e.line, format!("unknown key '{key}'")));
        }
        Ok(cfg)
    }
}

/// Collects `component.N.*` keys. Returns the spec and the first line that
/// mentioned a component.
fn parse_components(p: &mut Parser<'_>) -> CliResult<Option<(GeneratorSpec, usize)>> {
    let mut indices: BTreeMap<usize, usize> = BTreeMap::new();
    for (key, e) in &p.entries {
        if let Some(rest) = key.strip_prefix("component.") {
            let Some((idx, _)) = rest.split_once('.') else {
                return Err(p.err(e.line, format!("malformed component key '{key}'")));
            };
            let idx: usize = idx.parse().map_err(|_| p.err(e.line, format!("malformed component index in '{key}'")))?;
            let first = indices.entry(idx).or_insert(e.line);
            *first = (*first).min(e.line);
        }
    }
    if indices.is_empty() {
        return Ok(None);
    }
    let first_line = *indices.values().min().unwrap();
    let mut components = Vec::new();
    let mut weights = Vec::new();
    for (expected, (&idx, &line)) in indices.iter().enumerate() {
        if idx != expected {
            return Err(p.err(line, format!("component indices must be 0, 1, 2, ...; found {idx}")));
        }
        let key = |name: &str| format!("component.{idx}.{name}");
        let Some(kind) = p.take(&key("kind")) else {
            return Err(p.err(line, format!("component {idx} has no kind")));
        };
        let component = match kind.value.as_str() {
            "lrf" => {
                let poly = p.list::<f64>(&key("poly"), "reals")?.unwrap_or_else(|| vec![1.0]);
                Component::Lrf {
                    alpha: p.real_or(&key("alpha"), 0.0)?,
                    omega: p.real_or(&key("omega"), 0.0)?,
                    phi: p.real_or(&key("phi"), 0.0)?,
                    poly,
                }
            }
            "harmonic" => {
                let freq =
                    p.real(&key("freq"))?.ok_or_else(|| p.err(kind.line, format!("{} needs freq", key("kind"))))?;
                let phase = p.real_or(&key("phase"), 0.0)?;
                let scale = p.real_or(&key("wrapper_scale"), 1.0)?;
                let wrapper = match p.take(&key("wrapper")) {
                    None => Wrapper::Identity,
                    Some(w) => match w.value.as_str() {
                        "identity" => Wrapper::Identity,
                        "sin" => Wrapper::Sin { scale },
                        "cos" => Wrapper::Cos { scale },
                        "exp_square" => Wrapper::ExpSquare { scale },
                        other => return Err(p.err(w.line, format!("unknown wrapper '{other}'"))),
                    },
                };
                Component::Harmonic { freq, phase, wrapper }
            }
            "trend_power" => Component::Trend(Trend::Power {
                exponent: p
                    .real(&key("exponent"))?
                    .ok_or_else(|| p.err(kind.line, format!("{} needs exponent", key("kind"))))?,
                coeff: p.real_or(&key("coeff"), 1.0)?,
            }),
            "trend_log" => Component::Trend(Trend::Log { coeff: p.real_or(&key("coeff"), 1.0)? }),
            other => return Err(p.err(kind.line, format!("unknown component kind '{other}'"))),
        };
        weights.push(p.real_or(&key("weight"), 1.0)?);
        components.push(component);
    }
    let spec = GeneratorSpec::mixture(components, weights).map_err(|e| p.err(first_line, e.to_string()))?;
    Ok(Some((spec, first_line)))
}
