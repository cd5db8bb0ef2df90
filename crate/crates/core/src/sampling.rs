//! Sampling densities over K-space, i.i.d. frequency draws, and
//! deterministic masks.
//!
//! Stochastic plans carry preconditioning weights `rho_j = eta(omega_j)^{-1/2}`;
//! deterministic masks carry `rho = 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherence::CoherenceMap;
use crate::error::{Error, Result};
use crate::image::side_exponent;
use crate::transforms::fourier::{all_frequencies, frequency_range, FrequencyIndex};

/// Identifier recorded in every plan drawn by [`draw_plan`].
pub const GENERATOR: &str = "chacha8-seed_from_u64";

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    Uniform,
    /// `min(C, 1 / (k1^2 + k2^2))`
    InverseSquare {
        cap: f64,
    },
    /// `min(1, 1 / max(|k1|, |k2|))`
    InverseMax,
    /// `(k1^2 + k2^2 + 1)^{-alpha/2}`
    PowerLaw {
        alpha: f64,
    },
    /// Limit `alpha -> inf`; only realizable as a lowest-frequency mask.
    PowerLawInfinite,
    /// Proportional to the square of a coherence bound.
    KappaSquared,
    Custom,
}

/// Probability mass over the `N x N` frequency grid, stored by array position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    n: usize,
    values: Vec<f64>,
    /// `1 / sum` of the unnormalized masses.
    normalizer: f64,
    pub label: String,
    pub kind: DensityKind,
}

impl Density {
    /// Normalizes nonnegative masses given in array-position order.
    pub fn from_masses(n: usize, masses: Vec<f64>, label: impl Into<String>, kind: DensityKind) -> Result<Self> {
        side_exponent(n)?;
        if masses.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: masses.len(),
            });
        }
        if masses.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("masses must be finite and nonnegative".into()));
        }
        let total = compensated_sum(masses.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidDensity("total mass is zero".into()));
        }
        let normalizer = 1.0 / total;
        let values = masses.into_iter().map(|v| v / total).collect();
        Ok(Self {
            n,
            values,
            normalizer,
            label: label.into(),
            kind,
        })
    }

    fn from_fn(
        n: usize,
        label: impl Into<String>,
        kind: DensityKind,
        mass: impl Fn(FrequencyIndex) -> f64,
    ) -> Result<Self> {
        side_exponent(n)?;
        let masses = all_frequencies(n).map(mass).collect();
        Self::from_masses(n, masses, label, kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: FrequencyIndex) -> f64 {
        self.values[k.position(self.n)]
    }

    /// Probabilities in array-position order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The constant `C_N` turning unnormalized masses into probabilities.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind == DensityKind::PowerLawInfinite
    }
}

pub fn density_uniform(n: usize) -> Result<Density> {
    Density::from_fn(n, "uniform", DensityKind::Uniform, |_| 1.0)
}

/// Unnormalized `min(cap, 1 / (k1^2 + k2^2))`, with `cap` at the origin.
pub fn inverse_square_mass(k: FrequencyIndex, cap: f64) -> f64 {
    let r2 = k.radius_sq();
    if r2 == 0 {
        cap
    } else {
        cap.min(1.0 / r2 as f64)
    }
}

/// `eta(k) = C_N min(1, 1 / (k1^2 + k2^2))`.
pub fn density_inverse_square(n: usize) -> Result<Density> {
    density_inverse_square_with_cap(n, 1.0)
}

pub fn density_inverse_square_with_cap(n: usize, cap: f64) -> Result<Density> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::InvalidDensity(format!("cap must be positive, got {cap}")));
    }
    let label = if cap == 1.0 {
        "inv-square".to_string()
    } else {
        format!("inv-square(C={cap})")
    };
    Density::from_fn(n, label, DensityKind::InverseSquare { cap }, |k| {
        inverse_square_mass(k, cap)
    })
}

/// Power-law exponent; `Infinite` denotes the lowest-frequencies-only limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

/// `eta(k) ∝ (k1^2 + k2^2 + 1)^{-alpha/2}`. `alpha = 0` is uniform; the
/// infinite exponent yields a degenerate density (point mass at the origin)
/// that [`draw_plan`] refuses.
pub fn density_power_law(n: usize, alpha: Alpha) -> Result<Density> {
    match alpha {
        Alpha::Infinite => Density::from_fn(n, "power:inf", DensityKind::PowerLawInfinite, |k| {
            if k.radius_sq() == 0 {
                1.0
            } else {
                0.0
            }
        }),
        Alpha::Finite(a) if a.is_nan() || a < 0.0 => Err(Error::InvalidDensity(format!("alpha must be >= 0, got {a}"))),
        Alpha::Finite(a) if a.is_infinite() => density_power_law(n, Alpha::Infinite),
        Alpha::Finite(a) => Density::from_fn(n, format!("power:{a}"), DensityKind::PowerLaw { alpha: a }, |k| {
            ((k.radius_sq() + 1) as f64).powf(-a / 2.0)
        }),
    }
}

/// `eta(k) ∝ min(1, 1 / max(|k1|, |k2|))`.
pub fn density_inverse_max(n: usize) -> Result<Density> {
    Density::from_fn(n, "inv-max", DensityKind::InverseMax, |k| {
        let m = k.max_abs();
        if m == 0 {
            1.0
        } else {
            1.0 / m as f64
        }
    })
}

/// `nu(k) = kappa(k)^2 / ||kappa||_2^2`.
pub fn density_from_kappa(kappa: &CoherenceMap) -> Result<Density> {
    if let Some(v) = kappa.values().iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::InvalidDensity(format!(
            "kappa entries must be positive, found {v}"
        )));
    }
    Density::from_masses(
        kappa.n(),
        kappa.values().iter().map(|v| v * v).collect(),
        "kappa-squared",
        DensityKind::KappaSquared,
    )
}

/// Sampled frequencies with their preconditioning weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n: usize,
    pub freqs: Vec<FrequencyIndex>,
    pub rho: Vec<f64>,
    pub density_label: String,
    pub seed: Option<u64>,
    pub generator: Option<String>,
}

impl SamplingPlan {
    /// Every frequency once, in array-position order, with `rho = 1`.
    pub fn full(n: usize) -> Result<Self> {
        side_exponent(n)?;
        let freqs: Vec<FrequencyIndex> = all_frequencies(n).collect();
        Ok(Self {
            n,
            rho: vec![1.0; freqs.len()],
            freqs,
            density_label: "full".into(),
            seed: None,
            generator: None,
        })
    }

    /// Deterministic plan with unit weights.
    pub fn from_frequencies(n: usize, freqs: Vec<FrequencyIndex>, label: impl Into<String>) -> Result<Self> {
        side_exponent(n)?;
        freqs.iter().try_for_each(|k| k.check(n))?;
        Ok(Self {
            n,
            rho: vec![1.0; freqs.len()],
            freqs,
            density_label: label.into(),
            seed: None,
            generator: None,
        })
    }

    pub fn m(&self) -> usize {
        self.freqs.len()
    }

    pub fn validate(&self) -> Result<()> {
        side_exponent(self.n)?;
        if self.rho.len() != self.freqs.len() {
            return Err(Error::SizeMismatch {
                expected: self.freqs.len(),
                got: self.rho.len(),
            });
        }
        if self.rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidSampling("weights must be positive".into()));
        }
        self.freqs.iter().try_for_each(|k| k.check(self.n))
    }

    /// Sampled-at-least-once flags in array-position order.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n * self.n];
        for k in &self.freqs {
            mask[k.position(self.n)] = true;
        }
        mask
    }

    pub fn distinct_count(&self) -> usize {
        self.mask().iter().filter(|b| **b).count()
    }
}

/// `m` i.i.d. draws by inverse CDF over the flattened density.
pub fn draw_plan(density: &Density, m: usize, seed: u64) -> Result<SamplingPlan> {
    if m == 0 {
        return Err(Error::InvalidSampling("m must be at least 1".into()));
    }
    if density.is_degenerate() {
        return Err(Error::DegenerateDensity(density.label.clone()));
    }
    let n = density.n();
    let mut cdf = Vec::with_capacity(n * n);
    let mut acc = 0.0;
    for v in density.values() {
        acc += v;
        cdf.push(acc);
    }
    let total = acc;
    let last_positive = density
        .values()
        .iter()
        .rposition(|v| *v > 0.0)
        .expect("density has positive mass");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut freqs = Vec::with_capacity(m);
    let mut rho = Vec::with_capacity(m);
    for _ in 0..m {
        let u = rng.random::<f64>() * total;
        let pos = cdf.partition_point(|c| *c <= u).min(last_positive);
        let k = FrequencyIndex::from_position(n, pos);
        freqs.push(k);
        rho.push(1.0 / density.values()[pos].sqrt());
    }
    Ok(SamplingPlan {
        n,
        freqs,
        rho,
        density_label: density.label.clone(),
        seed: Some(seed),
        generator: Some(GENERATOR.into()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaskSpec {
    /// The `m` frequencies of smallest `k1^2 + k2^2`.
    LowestFrequencies(usize),
    /// `L` digital lines through the origin at angles `i pi / L`.
    RadialLines(usize),
    /// Uniform i.i.d. draws.
    UniformGrid { m: usize, seed: u64 },
}

/// Angle of `k` in `[0, 2 pi)`.
fn angle(k: FrequencyIndex) -> f64 {
    let a = (k.k2 as f64).atan2(k.k1 as f64);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

pub fn deterministic_mask(n: usize, spec: MaskSpec) -> Result<SamplingPlan> {
    side_exponent(n)?;
    match spec {
        MaskSpec::LowestFrequencies(m) => {
            if m == 0 || m > n * n {
                return Err(Error::InvalidSampling(format!("m = {m} outside 1..={}", n * n)));
            }
            let mut all: Vec<(usize, FrequencyIndex)> = all_frequencies(n).enumerate().collect();
            all.sort_by(|(pa, a), (pb, b)| {
                a.radius_sq()
                    .cmp(&b.radius_sq())
                    .then(angle(*a).partial_cmp(&angle(*b)).unwrap_or(std::cmp::Ordering::Equal))
                    .then(pa.cmp(pb))
            });
            let freqs = all.into_iter().take(m).map(|(_, k)| k).collect();
            SamplingPlan::from_frequencies(n, freqs, format!("lowpass:{m}"))
        }
        MaskSpec::RadialLines(lines) => {
            if lines == 0 {
                return Err(Error::InvalidSampling("need at least one radial line".into()));
            }
            let (lo, hi) = frequency_range(n);
            let mut seen = vec![false; n * n];
            let mut freqs = Vec::new();
            let mut push = |k1: i64, k2: i64| {
                if (lo..=hi).contains(&k1) && (lo..=hi).contains(&k2) {
                    let k = FrequencyIndex { k1, k2 };
                    let pos = k.position(n);
                    if !seen[pos] {
                        seen[pos] = true;
                        freqs.push(k);
                    }
                }
            };
            for i in 0..lines {
                let theta = PI * i as f64 / lines as f64;
                let (c, s) = (theta.cos(), theta.sin());
                if c.abs() >= s.abs() {
                    let slope = s / c;
                    for k1 in lo..=hi {
                        push(k1, (k1 as f64 * slope).round() as i64);
                    }
                } else {
                    let slope = c / s;
                    for k2 in lo..=hi {
                        push((k2 as f64 * slope).round() as i64, k2);
                    }
                }
            }
            SamplingPlan::from_frequencies(n, freqs, format!("radial:{lines}"))
        }
        MaskSpec::UniformGrid { m, seed } => {
            if m > n * n {
                return Err(Error::InvalidSampling(format!("m = {m} exceeds N^2 = {}", n * n)));
            }
            draw_plan(&density_uniform(n)?, m, seed)
        }
    }
}
