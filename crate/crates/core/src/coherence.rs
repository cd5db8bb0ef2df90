//! Local coherence between the 2-D Fourier basis and the bivariate Haar
//! system, and the analytic bounds `kappa` and `kappa'`.
//!
//! The bivariate inner product factors into univariate ones,
//! `<phi_{k1,k2}, h^e_{n,l}> = <phi_{k1}, h^{e1}_{n,l1}> <phi_{k2}, h^{e2}_{n,l2}>`,
//! and the univariate modulus does not depend on the shift `l`. The exact
//! supremum per frequency therefore only needs two `N x p` tables.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::side_exponent;
use crate::transforms::fourier::{all_frequencies, frequency_range, FrequencyIndex};

/// Absolute slack used when comparing computed magnitudes against bounds.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Nonnegative values over the K-space grid, stored by array position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceMap {
    n: usize,
    values: Vec<f64>,
}

impl CoherenceMap {
    pub fn from_fn(n: usize, f: impl Fn(FrequencyIndex) -> f64 + Sync) -> Result<Self> {
        side_exponent(n)?;
        let values = (0..n * n)
            .into_par_iter()
            .map(|pos| f(FrequencyIndex::from_position(n, pos)))
            .collect();
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: FrequencyIndex) -> f64 {
        self.values[k.position(self.n)]
    }

    /// Values in array-position order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (FrequencyIndex, f64)> + '_ {
        all_frequencies(self.n).zip(self.values.iter().copied())
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_1d(p: u32, k: i64, e: u8, n: u32, l: usize) -> Result<()> {
    let len = 1usize << p;
    let (lo, hi) = frequency_range(len);
    if p == 0 || n >= p || l >= (1 << n) || e > 1 || k < lo || k > hi {
        return Err(Error::InvalidHaarIndex(format!(
            "k = {k}, e = {e}, n = {n}, l = {l} for p = {p}"
        )));
    }
    Ok(())
}

#[inline]
fn unit(angle_turns: f64) -> Complex64 {
    let a = 2.0 * PI * angle_turns;
    Complex64::new(a.cos(), a.sin())
}

/// `<phi_k, h^e_{n,l}>` on `2^p` points via the geometric-series closed form.
pub fn fourier_haar_inner_1d(p: u32, k: i64, e: u8, n: u32, l: usize) -> Result<Complex64> {
    check_1d(p, k, e, n, l)?;
    Ok(inner_1d_unchecked(p, k, e, n, l))
}

fn inner_1d_unchecked(p: u32, k: i64, e: u8, n: u32, l: usize) -> Complex64 {
    if k == 0 {
        return if e == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(2f64.powf(-(n as f64) / 2.0), 0.0)
        };
    }
    let kf = k as f64;
    let half_turn = kf / 2f64.powi(n as i32 + 1);
    let sign = if e == 1 { -1.0 } else { 1.0 };
    let shift = unit((l as f64) * kf / 2f64.powi(n as i32));
    let halves = Complex64::new(1.0, 0.0) + unit(half_turn) * sign;
    let amp = 2f64.powf(n as f64 / 2.0 - p as f64);
    let series =
        (Complex64::new(1.0, 0.0) - unit(half_turn)) / (Complex64::new(1.0, 0.0) - unit(kf / 2f64.powi(p as i32)));
    shift * halves * series * amp
}

/// `|<phi_k, h^e_{n,0}>|` for every frequency position, each `e` and `n`.
/// Indexed `[e][n][k mod N]`.
fn univariate_tables(p: u32) -> [Vec<Vec<f64>>; 2] {
    let len = 1usize << p;
    let table = |e: u8| {
        (0..p)
            .map(|n| {
                (0..len)
                    .map(|r| {
                        let k = if r > len / 2 { r as i64 - len as i64 } else { r as i64 };
                        inner_1d_unchecked(p, k, e, n, 0).norm()
                    })
                    .collect()
            })
            .collect()
    };
    [table(0), table(1)]
}

/// Exact local coherence `mu(k1,k2) = max_h |<phi_{k1,k2}, h>|` over the
/// full bivariate Haar basis, using the factored supremum.
pub fn local_coherence_exact(n: usize) -> Result<CoherenceMap> {
    let p = side_exponent(n)?;
    let tables = univariate_tables(p);
    CoherenceMap::from_fn(n, |k| {
        let r1 = k.k1.rem_euclid(n as i64) as usize;
        let r2 = k.k2.rem_euclid(n as i64) as usize;
        // constant atom = window at scale 0 in both coordinates
        let mut best = tables[0][0][r1] * tables[0][0][r2];
        for (window, detail) in tables[0].iter().zip(&tables[1]) {
            let (w1, w2, d1, d2) = (window[r1], window[r2], detail[r1], detail[r2]);
            best = best.max(w1 * d2).max(d1 * w2).max(d1 * d2);
        }
        best
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaVariant {
    /// `min(1, 18 pi / max(|k1|, |k2|))`
    Max,
    /// `min(1, 18 pi sqrt(2) / |k|)`
    Radial,
}

/// `kappa(k1, k2) = min(1, 18 pi / max(|k1|, |k2|))`, equal to 1 at the origin.
pub fn kappa_bound(k1: i64, k2: i64) -> f64 {
    let m = k1.abs().max(k2.abs());
    if m == 0 {
        1.0
    } else {
        (18.0 * PI / m as f64).min(1.0)
    }
}

/// `kappa'(k1, k2) = min(1, 18 pi sqrt(2) / sqrt(k1^2 + k2^2))`, equal to 1 at the origin.
pub fn kappa_prime_bound(k1: i64, k2: i64) -> f64 {
    let r2 = k1 * k1 + k2 * k2;
    if r2 == 0 {
        1.0
    } else {
        (18.0 * PI * 2f64.sqrt() / (r2 as f64).sqrt()).min(1.0)
    }
}

pub fn kappa_value(variant: KappaVariant, k: FrequencyIndex) -> f64 {
    match variant {
        KappaVariant::Max => kappa_bound(k.k1, k.k2),
        KappaVariant::Radial => kappa_prime_bound(k.k1, k.k2),
    }
}

pub fn kappa_map(n: usize, variant: KappaVariant) -> Result<CoherenceMap> {
    CoherenceMap::from_fn(n, |k| kappa_value(variant, k))
}

/// Exact l2 norm of the bound over the `N x N` frequency grid.
pub fn kappa_l2(n: usize, variant: KappaVariant) -> Result<f64> {
    side_exponent(n)?;
    let (lo, hi) = frequency_range(n);
    let mut sum = 0.0;
    for k1 in lo..=hi {
        for k2 in lo..=hi {
            let v = kappa_value(variant, FrequencyIndex { k1, k2 });
            sum += v * v;
        }
    }
    Ok(sum.sqrt())
}

/// The claimed envelope `52 sqrt(p)` for `||kappa'||_2`.
pub fn kappa_l2_envelope(n: usize) -> Result<f64> {
    Ok(52.0 * (side_exponent(n)? as f64).sqrt())
}

/// Outcome of the exhaustive univariate incoherence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateCheck {
    pub n: usize,
    /// `max |<phi_k, h>| / min(6 2^{n/2} / |k|, 3 pi 2^{-n/2})` over `k != 0`,
    /// all scales, shifts, and both window and step atoms.
    pub max_lemma_ratio: f64,
    /// `max |<phi_k, h^1_{n,l}>| / (3 sqrt(2 pi) / sqrt(|k|))` over `k != 0`.
    pub max_corollary_ratio: f64,
    pub atoms_checked: usize,
}

impl UnivariateCheck {
    pub fn passed(&self) -> bool {
        self.max_lemma_ratio <= 1.0 + BOUND_TOLERANCE && self.max_corollary_ratio <= 1.0 + BOUND_TOLERANCE
    }
}

pub fn univariate_coherence_bound_check(n: usize) -> Result<UnivariateCheck> {
    let p = side_exponent(n)?;
    let (lo, hi) = frequency_range(n);
    let ks: Vec<i64> = (lo..=hi).filter(|&k| k != 0).collect();
    let per_k: Vec<(f64, f64, usize)> = ks
        .par_iter()
        .map(|&k| {
            let kabs = k.abs() as f64;
            let mut lemma: f64 = 0.0;
            let mut corollary: f64 = 0.0;
            let mut count = 0;
            for level in 0..p {
                let scale = 2f64.powf(level as f64 / 2.0);
                let bound = (6.0 * scale / kabs).min(3.0 * PI / scale);
                for l in 0..1usize << level {
                    for e in 0..=1u8 {
                        let v = inner_1d_unchecked(p, k, e, level, l).norm();
                        lemma = lemma.max(v / bound);
                        if e == 1 {
                            corollary = corollary.max(v / (3.0 * (2.0 * PI).sqrt() / kabs.sqrt()));
                        }
                        count += 1;
                    }
                }
            }
            (lemma, corollary, count)
        })
        .collect();
    Ok(per_k.into_iter().fold(
        UnivariateCheck {
            n,
            max_lemma_ratio: 0.0,
            max_corollary_ratio: 0.0,
            atoms_checked: 0,
        },
        |acc, (a, b, c)| UnivariateCheck {
            n,
            max_lemma_ratio: acc.max_lemma_ratio.max(a),
            max_corollary_ratio: acc.max_corollary_ratio.max(b),
            atoms_checked: acc.atoms_checked + c,
        },
    ))
}

/// Pointwise comparison of the exact map against `kappa` and `kappa'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConformance {
    pub n: usize,
    /// `max(mu - kappa)`; conformance needs this `<= BOUND_TOLERANCE`.
    pub max_excess_over_kappa: f64,
    /// `max(kappa - kappa')`.
    pub max_kappa_over_prime: f64,
    pub max_mu: f64,
}

impl BoundConformance {
    pub fn passed(&self) -> bool {
        self.max_excess_over_kappa <= BOUND_TOLERANCE
            && self.max_kappa_over_prime <= BOUND_TOLERANCE
            && self.max_mu <= 1.0 + BOUND_TOLERANCE
    }
}

pub fn bound_conformance(mu: &CoherenceMap) -> BoundConformance {
    let mut out = BoundConformance {
        n: mu.n(),
        max_excess_over_kappa: f64::NEG_INFINITY,
        max_kappa_over_prime: f64::NEG_INFINITY,
        max_mu: 0.0,
    };
    for (k, v) in mu.iter() {
        let kap = kappa_bound(k.k1, k.k2);
        let kp = kappa_prime_bound(k.k1, k.k2);
        out.max_excess_over_kappa = out.max_excess_over_kappa.max(v - kap);
        out.max_kappa_over_prime = out.max_kappa_over_prime.max(kap - kp);
        out.max_mu = out.max_mu.max(v);
    }
    out
}
