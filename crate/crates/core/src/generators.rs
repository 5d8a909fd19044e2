//! Synthetic signals, observation noise and random missingness.
//!
//! Mean signals are mixtures `f(t) = Σ ρ_q f_q(t)` of
//!
//! * linear-recurrent terms `exp(αt) · cos(2πωt + φ) · P(t)`,
//! * Lipschitz maps of a sinusoid `g(sin(2πωt + φ))`,
//! * sub-linear trends `γ t^a` (a < 1) and `log(γ t)`.
//!
//! All randomness is derived per time index from an explicit seed, so a
//! draw at time t does not depend on how many other draws were made.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::series::TimeSeries;

/// Bounded Lipschitz map applied to a sinusoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wrapper {
    Identity,
    /// `sin(scale · x)`
    Sin {
        scale: f64,
    },
    /// `cos(scale · x)`
    Cos {
        scale: f64,
    },
    /// `exp(scale · x²)`
    ExpSquare {
        scale: f64,
    },
}

impl Wrapper {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Wrapper::Identity => x,
            Wrapper::Sin { scale } => (scale * x).sin(),
            Wrapper::Cos { scale } => (scale * x).cos(),
            Wrapper::ExpSquare { scale } => (scale * x * x).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Wrapper::Identity => "identity",
            Wrapper::Sin { .. } => "sin",
            Wrapper::Cos { .. } => "cos",
            Wrapper::ExpSquare { .. } => "exp_square",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Wrapper::Identity => 1.0,
            Wrapper::Sin { scale } | Wrapper::Cos { scale } | Wrapper::ExpSquare { scale } => scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trend {
    /// `coeff · t^exponent`, exponent < 1.
    Power { exponent: f64, coeff: f64 },
    /// `log(coeff · t)`, coeff > 0.
    Log { coeff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// `exp(alpha t) cos(2π omega t + phi) Σ_i poly[i] tⁱ`
    Lrf {
        alpha: f64,
        omega: f64,
        phi: f64,
        poly: Vec<f64>,
    },
    /// `wrapper(sin(2π freq t + phase))`
    Harmonic {
        freq: f64,
        phase: f64,
        wrapper: Wrapper,
    },
    Trend(Trend),
}

impl Component {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Component::Lrf { alpha, omega, phi, poly } => {
                let p = poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
                (alpha * t).exp() * (2.0 * PI * omega * t + phi).cos() * p
            }
            Component::Harmonic { freq, phase, wrapper } => wrapper.apply((2.0 * PI * freq * t + phase).sin()),
            Component::Trend(Trend::Power { exponent, coeff }) => coeff * t.powf(*exponent),
            Component::Trend(Trend::Log { coeff }) => (coeff * t).ln(),
        }
    }

    /// Degree of the polynomial factor of an LRF term.
    pub fn poly_degree(&self) -> Option<usize> {
        match self {
            Component::Lrf { poly, .. } => Some(poly.iter().rposition(|&c| c != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Component::Lrf { alpha, omega, phi, poly } => {
                if poly.is_empty() {
                    return Err(Error::InvalidSpec("LRF term needs at least one polynomial coefficient".into()));
                }
                if !finite(&[*alpha, *omega, *phi]) || !finite(poly) {
                    return Err(Error::InvalidSpec("LRF term has non-finite parameters".into()));
                }
            }
            Component::Harmonic { freq, phase, wrapper } => {
                if !finite(&[*freq, *phase, wrapper.scale()]) {
                    return Err(Error::InvalidSpec("harmonic term has non-finite parameters".into()));
                }
            }
            Component::Trend(Trend::Power { exponent, coeff }) => {
                if !finite(&[*exponent, *coeff]) || *exponent >= 1.0 {
                    return Err(Error::InvalidSpec(format!("power trend exponent {exponent} must be finite and < 1")));
                }
            }
            Component::Trend(Trend::Log { coeff }) => {
                if !(coeff.is_finite() && *coeff > 0.0) {
                    return Err(Error::InvalidSpec(format!("log trend coefficient {coeff} must be > 0")));
                }
            }
        }
        Ok(())
    }
}

/// Weighted mixture of signal components.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    components: Vec<Component>,
    weights: Vec<f64>,
}

impl GeneratorSpec {
    /// Unit-weight mixture.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let weights = vec![1.0; components.len()];
        Self::mixture(components, weights)
    }

    pub fn mixture(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSpec("at least one component is required".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidSpec(format!(
                "{} mixture weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidSpec("mixture weights must be finite".into()));
        }
        components.iter().try_for_each(Component::validate)?;
        Ok(Self { components, weights })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, t: usize) -> f64 {
        let t = t as f64;
        self.components.iter().zip(&self.weights).map(|(c, w)| w * c.value(t)).sum()
    }

    /// Mean signal f(1..=len).
    pub fn generate_mean<T: Real>(&self, len: usize) -> Result<TimeSeries<T>> {
        TimeSeries::from_fn(len, |t| T::of(self.value(t)))
    }

    fn lrf_terms(&self) -> Result<impl Iterator<Item = (&Component, f64)> + '_> {
        if let Some(bad) = self.components.iter().find(|c| !matches!(c, Component::Lrf { .. })) {
            return Err(Error::InvalidSpec(format!("not a linear recurrent term: {bad:?}")));
        }
        Ok(self.components.iter().zip(self.weights.iter().copied()))
    }

    /// Upper bound A(m_max + 1)(m_max + 2) on the recurrence order of a pure
    /// LRF mixture with A terms and maximal polynomial degree m_max.
    pub fn lrf_order_bound(&self) -> Result<usize> {
        let terms: Vec<_> = self.lrf_terms()?.collect();
        let m_max = terms.iter().filter_map(|(c, _)| c.poly_degree()).max().unwrap_or(0);
        Ok(terms.len() * (m_max + 1) * (m_max + 2))
    }

    /// Coefficients α_1..α_G with f(t) = Σ_g α_g f(t − g) for a pure LRF mixture.
    ///
    /// Built from the characteristic roots exp(α ± 2πiω), each with
    /// multiplicity deg P + 1.
    pub fn lrf_coefficients(&self) -> Result<Vec<f64>> {
        let mut roots: Vec<(Complex64, usize)> = Vec::new();
        let mut add_root = |r: Complex64, mult: usize| match roots
            .iter_mut()
            .find(|(q, _)| (*q - r).norm() < 1e-12 * (1.0 + r.norm()))
        {
            Some((_, m)) => *m = (*m).max(mult),
            None => roots.push((r, mult)),
        };
        for (c, w) in self.lrf_terms()? {
            let Component::Lrf { alpha, omega, poly, .. } = c else { unreachable!() };
            if w == 0.0 || poly.iter().all(|&p| p == 0.0) {
                continue;
            }
            let mult = c.poly_degree().unwrap() + 1;
            let r = Complex64::from_polar(alpha.exp(), 2.0 * PI * omega);
            let twice = 2.0 * omega;
            if (twice - twice.round()).abs() < 1e-12 {
                add_root(Complex64::new(r.re, 0.0), mult);
            } else {
                add_root(r, mult);
                add_root(r.conj(), mult);
            }
        }
        // Expand Π (z − r)^m = z^G + c_1 z^{G−1} + ... + c_G.
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for (r, m) in roots {
            for _ in 0..m {
                let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
                for (i, &c) in poly.iter().enumerate() {
                    next[i] += c;
                    next[i + 1] -= c * r;
                }
                poly = next;
            }
        }
        Ok(poly[1..].iter().map(|c| -c.re).collect())
    }
}

/// Extends `initial` to length `len` with f(t) = Σ_g coeffs[g−1] f(t − g).
pub fn extend_by_recursion(coeffs: &[f64], initial: &[f64], len: usize) -> Vec<f64> {
    assert!(initial.len() >= coeffs.len(), "need at least G initial values");
    let mut out = initial.to_vec();
    out.truncate(len.max(coeffs.len()));
    while out.len() < len {
        let t = out.len();
        out.push(coeffs.iter().enumerate().map(|(g, a)| a * out[t - 1 - g]).sum());
    }
    out
}

/// Affine map `x ↦ scale · x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub scale: f64,
    pub offset: f64,
}

impl Affine {
    /// Maps `[lo, hi]` onto `[−1, 1]`.
    pub fn onto_unit_interval(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Self { scale: 2.0 / (hi - lo), offset: -(hi + lo) / (hi - lo) }
        } else {
            Self { scale: 1.0, offset: -lo }
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }

    pub fn invert(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }
}

/// Observation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// X(t) = f(t) + N(0, σ²).
    Gaussian {
        sigma: f64,
    },
    /// X(t) = min(Poisson(scale · f(t)), cap), affinely normalised so that
    /// [0, cap] maps onto [−1, 1].
    PoissonTruncated {
        cap: f64,
        scale: f64,
    },
}

const NOISE_STREAM: u64 = 0x6e6f_6973_6500_0001;
const MASK_STREAM: u64 = 0x6d61_736b_0000_0002;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for draw number `t` of `stream` under `seed`.
pub fn index_rng(seed: u64, stream: u64, t: usize) -> SplitMix64 {
    SplitMix64::seed_from_u64(mix64(mix64(seed ^ stream).wrapping_add(t as u64)))
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Gaussian { sigma } if sigma.is_finite() && sigma >= 0.0 => Ok(()),
            NoiseSpec::PoissonTruncated { cap, scale }
                if cap > 0.0 && cap.is_finite() && scale > 0.0 && scale.is_finite() =>
            {
                Ok(())
            }
            other => Err(Error::InvalidSpec(format!("invalid noise parameters: {other:?}"))),
        }
    }

    /// Normalisation applied to Poisson observations: the observation range
    /// [0, cap] maps onto [−1, 1], so observations and latent rates both lie
    /// in [−1, 1].
    pub fn normalization(&self) -> Option<Affine> {
        match *self {
            NoiseSpec::PoissonTruncated { cap, .. } => Some(Affine::onto_unit_interval(0.0, cap)),
            _ => None,
        }
    }

    /// The series the noisy observations are centred on, in observation units.
    pub fn latent<T: Real>(&self, mean: &TimeSeries<T>) -> TimeSeries<T> {
        match (self, self.normalization()) {
            (NoiseSpec::PoissonTruncated { scale, .. }, Some(a)) => mean.map(|v| T::of(a.apply(scale * v.as_f64()))),
            _ => mean.clone(),
        }
    }

    /// Draws observations around `mean`; missing entries stay missing.
    pub fn apply<T: Real>(&self, mean: &TimeSeries<T>, seed: u64) -> Result<TimeSeries<T>> {
        self.validate()?;
        let norm = self.normalization();
        let values = mean
            .iter()
            .map(|(t, v)| {
                let Some(v) = v else { return Ok(None) };
                let x = v.as_f64();
                let y = match *self {
                    NoiseSpec::None => return Ok(Some(v)),
                    NoiseSpec::Gaussian { sigma } => {
                        let z: f64 = index_rng(seed, NOISE_STREAM, t).sample(StandardNormal);
                        x + sigma * z
                    }
                    NoiseSpec::PoissonTruncated { cap, scale } => {
                        let rate = scale * x;
                        if rate < 0.0 {
                            return Err(Error::NegativeRate { t, rate });
                        }
                        let draw = if rate == 0.0 {
                            0.0
                        } else {
                            let dist = Poisson::new(rate)
                                .map_err(|e| Error::InvalidSpec(format!("Poisson rate {rate}: {e}")))?;
                            dist.sample(&mut index_rng(seed, NOISE_STREAM, t))
                        };
                        norm.expect("Poisson noise is normalised").apply(draw.min(cap))
                    }
                };
                Ok(Some(T::of(y)))
            })
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(values)
    }
}

/// Independent Bernoulli(p) observation mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub p: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("observation probability p = {p} outside (0, 1]")));
        }
        Ok(Self { p, seed })
    }

    /// Whether time `t` is observed.
    pub fn keeps(&self, t: usize) -> bool {
        self.p >= 1.0 || index_rng(self.seed, MASK_STREAM, t).random::<f64>() < self.p
    }

    pub fn apply<T: Real>(&self, x: &TimeSeries<T>) -> TimeSeries<T> {
        let values = x.iter().map(|(t, v)| v.filter(|_| self.keeps(t))).collect();
        TimeSeries::new(values).expect("masking preserves length and finiteness")
    }
}

/// Draws noisy observations of `f`; see [`NoiseSpec::apply`].
pub fn apply_noise<T: Real>(f: &TimeSeries<T>, noise: &NoiseSpec, seed: u64) -> Result<TimeSeries<T>> {
    noise.apply(f, seed)
}

pub fn apply_mask<T: Real>(x: &TimeSeries<T>, mask: &MaskSpec) -> TimeSeries<T> {
    mask.apply(x)
}
