//! Small-scale numerical checks: restricted isometry constants, isotropy of
//! the preconditioned Fourier-Haar system, and the Haar/gradient lemmas.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::BOUND_TOLERANCE;
use crate::error::{Error, Result};
use crate::image::{side_exponent, tv_norm, Image};
use crate::sampling::{Density, SamplingPlan};
use crate::transforms::fourier::{all_frequencies, partial_dft};
use crate::transforms::haar::{all_haar_indices, haar_atom_1d, haar_atom_2d, haar_forward, HaarIndex};

/// Maximum number of supports [`rip_exact`] will enumerate.
pub const SUPPORT_BUDGET: u128 = 1_000_000;

/// Largest side length for which dense sensing matrices are materialized.
pub const DENSE_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMethod {
    Exhaustive,
    /// Maximum over random supports; a lower bound on `delta_s`.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub s: usize,
    pub delta_exact: Option<f64>,
    /// Largest deviation seen over the supports checked. Equals the exact
    /// value for exhaustive runs; otherwise only a lower bound.
    pub delta_lower_mc: f64,
    pub supports_checked: u128,
    pub method: RipMethod,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `max(|lambda_max - 1|, |1 - lambda_min|)` of the Gram restricted to `support`.
fn support_deviation(gram: &DMatrix<Complex64>, support: &[usize]) -> f64 {
    let s = support.len();
    let sub = DMatrix::from_fn(s, s, |i, j| gram[(support[i], support[j])]);
    let eig = SymmetricEigen::new(sub);
    eig.eigenvalues.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max)
}

fn gram(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.adjoint() * a
}

/// Advances `combo` (sorted, entries `< n`) to the next combination in
/// lexicographic order, keeping `combo[0]` fixed. Returns false when exhausted.
fn next_combination_tail(combo: &mut [usize], n: usize) -> bool {
    let s = combo.len();
    let mut i = s;
    while i > 1 {
        i -= 1;
        if combo[i] < n - (s - i) {
            combo[i] += 1;
            for j in i + 1..s {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact `delta_s` by spectral decomposition of every `s x s` column Gram.
pub fn rip_exact(a: &DMatrix<Complex64>, s: usize) -> Result<RipEstimate> {
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(Error::SparsityOutOfRange { s, len: n });
    }
    let needed = binomial(n, s);
    if needed > SUPPORT_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: SUPPORT_BUDGET,
        });
    }
    let g = gram(a);
    let delta = (0..=n - s)
        .into_par_iter()
        .map(|first| {
            let mut combo: Vec<usize> = (first..first + s).collect();
            let mut worst: f64 = 0.0;
            loop {
                worst = worst.max(support_deviation(&g, &combo));
                if !next_combination_tail(&mut combo, n) {
                    break;
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(RipEstimate {
        s,
        delta_exact: Some(delta),
        delta_lower_mc: delta,
        supports_checked: needed,
        method: RipMethod::Exhaustive,
    })
}

/// Lower bound on `delta_s` from `trials` uniformly random supports.
pub fn rip_monte_carlo(a: &DMatrix<Complex64>, s: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(Error::SparsityOutOfRange { s, len: n });
    }
    if trials == 0 {
        return Err(Error::InvalidOption("trials must be at least 1".into()));
    }
    let g = gram(a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut support = sample(&mut rng, n, s).into_vec();
        support.sort_unstable();
        worst = worst.max(support_deviation(&g, &support));
    }
    Ok(RipEstimate {
        s,
        delta_exact: None,
        delta_lower_mc: worst,
        supports_checked: trials as u128,
        method: RipMethod::MonteCarlo,
    })
}

/// `(1/sqrt(m)) D F_Omega H^*`: row `j` is the sampled Fourier row scaled by
/// `rho_j / sqrt(m)`, columns follow the canonical Haar order.
pub fn build_preconditioned_matrix(plan: &SamplingPlan) -> Result<DMatrix<Complex64>> {
    plan.validate()?;
    let n = plan.n;
    if n > DENSE_MAX_N {
        return Err(Error::InvalidSampling(format!(
            "dense matrix limited to N <= {DENSE_MAX_N}, got {n}"
        )));
    }
    let p = side_exponent(n)?;
    let m = plan.m();
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let mut a = DMatrix::from_element(m, n * n, Complex64::new(0.0, 0.0));
    for (col, idx) in all_haar_indices(p).enumerate() {
        let atom = haar_atom_2d(p, idx)?;
        let column = partial_dft(&atom, &plan.freqs)?;
        for (j, v) in column.into_iter().enumerate() {
            a[(j, col)] = v * plan.rho[j] * inv_sqrt_m;
        }
    }
    Ok(a)
}

/// `max |sum_k nu(k) rho(k)^2 conj(A_{k,c1}) A_{k,c2} - delta_{c1,c2}|` over the
/// full frequency grid, with `rho = nu^{-1/2}` and `A = F H^*`.
pub fn isotropy_deviation(density: &Density) -> Result<f64> {
    let n = density.n();
    if n > DENSE_MAX_N {
        return Err(Error::InvalidSampling(format!(
            "dense matrix limited to N <= {DENSE_MAX_N}, got {n}"
        )));
    }
    if density.values().iter().any(|v| *v <= 0.0) {
        return Err(Error::InvalidDensity(
            "isotropy needs a strictly positive density".into(),
        ));
    }
    let p = side_exponent(n)?;
    let freqs: Vec<_> = all_frequencies(n).collect();
    let cols = n * n;
    let mut a = DMatrix::from_element(freqs.len(), cols, Complex64::new(0.0, 0.0));
    for (col, idx) in all_haar_indices(p).enumerate() {
        let column = partial_dft(&haar_atom_2d(p, idx)?, &freqs)?;
        for (row, v) in column.into_iter().enumerate() {
            a[(row, col)] = v;
        }
    }
    let mut weighted = a.clone();
    for (row, k) in freqs.iter().enumerate() {
        let nu = density.get(*k);
        let rho_sq = 1.0 / nu;
        for col in 0..cols {
            weighted[(row, col)] *= nu * rho_sq;
        }
    }
    let m = a.adjoint() * weighted;
    let mut worst: f64 = 0.0;
    for i in 0..cols {
        for j in 0..cols {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeLemmaCheck {
    pub n: usize,
    /// Largest number of atoms changing across one `(t1,t2)-(t1,t2+1)` edge.
    pub max_count: usize,
    /// Same count for `(t1,t2)-(t1+1,t2)` edges.
    pub max_count_transposed: usize,
    pub bound: usize,
}

impl EdgeLemmaCheck {
    pub fn passed(&self) -> bool {
        self.max_count <= self.bound && self.max_count_transposed <= self.bound
    }
}

/// Exhaustive edge-crossing count over all bivariate atoms.
pub fn check_edge_lemma(n: usize) -> Result<EdgeLemmaCheck> {
    let p = side_exponent(n)?;
    let mut along_t2 = vec![0usize; n * (n - 1)];
    let mut along_t1 = vec![0usize; (n - 1) * n];
    for idx in all_haar_indices(p) {
        let (a, b) = match idx {
            HaarIndex::Constant => continue,
            HaarIndex::Detail { e, n: level, l1, l2 } => {
                let (e1, e2) = e.pair();
                (haar_atom_1d(p, e1, level, l1)?, haar_atom_1d(p, e2, level, l2)?)
            }
        };
        // h(t1,t2) = a[t1] b[t2]; it changes across an edge iff the factor
        // along the edge changes and the other factor is nonzero there
        for t1 in 0..n {
            if a[t1] == 0.0 {
                continue;
            }
            for t2 in 0..n - 1 {
                if b[t2 + 1] != b[t2] {
                    along_t2[t1 * (n - 1) + t2] += 1;
                }
            }
        }
        for t2 in 0..n {
            if b[t2] == 0.0 {
                continue;
            }
            for t1 in 0..n - 1 {
                if a[t1 + 1] != a[t1] {
                    along_t1[t1 * n + t2] += 1;
                }
            }
        }
    }
    Ok(EdgeLemmaCheck {
        n,
        max_count: along_t2.into_iter().max().unwrap_or(0),
        max_count_transposed: along_t1.into_iter().max().unwrap_or(0),
        bound: 6 * p as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomTvCheck {
    pub n: usize,
    pub max_tv: f64,
    pub argmax: HaarIndex,
    pub bound: f64,
}

impl AtomTvCheck {
    pub fn passed(&self) -> bool {
        self.max_tv <= self.bound + BOUND_TOLERANCE
    }
}

/// Largest anisotropic TV over all bivariate Haar atoms.
pub fn check_atom_tv(n: usize) -> Result<AtomTvCheck> {
    let p = side_exponent(n)?;
    let indices: Vec<HaarIndex> = all_haar_indices(p).collect();
    let tvs: Vec<f64> = indices
        .par_iter()
        .map(|idx| haar_atom_2d(p, *idx).map(|a| tv_norm(&a)))
        .collect::<Result<_>>()?;
    let (best, max_tv) = tvs.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc },
    );
    Ok(AtomTvCheck {
        n,
        max_tv,
        argmax: indices[best],
        bound: 8.0,
    })
}

/// `max_k k |w_(k)| / ||f||_TV` for the mean-removed image, `w_(k)` the
/// `k`-th largest Haar coefficient in magnitude.
pub fn check_coeff_decay(f: &Image) -> Result<f64> {
    let centered = f.shifted(-f.mean());
    let tv = tv_norm(&centered);
    if tv <= 1e-300 {
        return Err(Error::ZeroTotalVariation);
    }
    let mut mags: Vec<f64> = haar_forward(&centered).as_slice().iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(mags
        .iter()
        .enumerate()
        .map(|(i, w)| (i + 1) as f64 * w / tv)
        .fold(0.0, f64::max))
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub claim: String,
    pub n: Option<usize>,
    pub bound: f64,
    pub measured: f64,
    pub passed: bool,
}

/// Lemma and identity checks for each side length, plus the isotropy
/// identity at `N = 8`.
pub fn run_suite(sizes: &[usize]) -> Result<Vec<ClaimResult>> {
    let mut out = Vec::new();
    for &n in sizes {
        side_exponent(n)?;
        let edge = check_edge_lemma(n)?;
        out.push(ClaimResult {
            claim: "edge_crossings_le_6p".into(),
            n: Some(n),
            bound: edge.bound as f64,
            measured: edge.max_count.max(edge.max_count_transposed) as f64,
            passed: edge.passed(),
        });
        let tv = check_atom_tv(n)?;
        out.push(ClaimResult {
            claim: "atom_tv_le_8".into(),
            n: Some(n),
            bound: tv.bound,
            measured: tv.max_tv,
            passed: tv.passed(),
        });
        let uni = crate::coherence::univariate_coherence_bound_check(n)?;
        out.push(ClaimResult {
            claim: "univariate_incoherence_ratio_le_1".into(),
            n: Some(n),
            bound: 1.0,
            measured: uni.max_lemma_ratio,
            passed: uni.max_lemma_ratio <= 1.0 + BOUND_TOLERANCE,
        });
        out.push(ClaimResult {
            claim: "univariate_corollary_ratio_le_1".into(),
            n: Some(n),
            bound: 1.0,
            measured: uni.max_corollary_ratio,
            passed: uni.max_corollary_ratio <= 1.0 + BOUND_TOLERANCE,
        });
    }
    let iso = isotropy_deviation(&crate::sampling::density_inverse_square(8)?)?;
    out.push(ClaimResult {
        claim: "preconditioned_isotropy_identity".into(),
        n: Some(8),
        bound: 1e-10,
        measured: iso,
        passed: iso <= 1e-10,
    });
    // every frequency once with the uniform-density weight rho = N
    let mut full_plan = SamplingPlan::full(4)?;
    full_plan.rho.iter_mut().for_each(|r| *r = 4.0);
    let full = build_preconditioned_matrix(&full_plan)?;
    let delta = rip_exact(&full, 2)?.delta_exact.unwrap_or(f64::INFINITY);
    out.push(ClaimResult {
        claim: "rip_full_sampling_delta2_zero".into(),
        n: Some(4),
        bound: 1e-10,
        measured: delta,
        passed: delta <= 1e-10,
    });
    Ok(out)
}
