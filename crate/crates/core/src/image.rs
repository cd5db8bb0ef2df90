//! Square complex images, discrete gradients, and the anisotropic TV semi-norm.
//!
//! Pixels are stored row-major: row index `t1`, column index `t2`, both in
//! `0..n`. Real-valued inputs are embedded with zero imaginary part.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns `p` with `n = 2^p`, rejecting anything that is not a power of two >= 2.
pub fn side_exponent(n: usize) -> Result<u32> {
    if n >= 2 && n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::InvalidSize(n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    n: usize,
    pixels: Vec<Complex64>,
}

impl Image {
    pub fn zeros(n: usize) -> Result<Self> {
        side_exponent(n)?;
        Ok(Self {
            n,
            pixels: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn constant(n: usize, value: Complex64) -> Result<Self> {
        side_exponent(n)?;
        Ok(Self {
            n,
            pixels: vec![value; n * n],
        })
    }

    pub fn from_complex(n: usize, pixels: Vec<Complex64>) -> Result<Self> {
        side_exponent(n)?;
        if pixels.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: pixels.len(),
            });
        }
        Ok(Self { n, pixels })
    }

    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::from_complex(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        side_exponent(n)?;
        let mut pixels = Vec::with_capacity(n * n);
        for t1 in 0..n {
            for t2 in 0..n {
                pixels.push(f(t1, t2));
            }
        }
        Ok(Self { n, pixels })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `p` with `n = 2^p`.
    pub fn scale_exponent(&self) -> u32 {
        self.n.trailing_zeros()
    }

    #[inline]
    pub fn get(&self, t1: usize, t2: usize) -> Complex64 {
        self.pixels[t1 * self.n + t2]
    }

    #[inline]
    pub fn set(&mut self, t1: usize, t2: usize, value: Complex64) {
        self.pixels[t1 * self.n + t2] = value;
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Complex64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<Complex64> {
        self.pixels
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.pixels.iter().map(|z| z.re).collect()
    }

    pub fn norm_l2(&self) -> f64 {
        l2(&self.pixels)
    }

    pub fn mean(&self) -> Complex64 {
        self.pixels.iter().sum::<Complex64>() / (self.pixels.len() as f64)
    }

    pub fn scaled(&self, factor: Complex64) -> Image {
        Image {
            n: self.n,
            pixels: self.pixels.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn shifted(&self, offset: Complex64) -> Image {
        Image {
            n: self.n,
            pixels: self.pixels.iter().map(|&z| z + offset).collect(),
        }
    }

    /// `self - other`; panics on mismatched sizes.
    pub fn sub(&self, other: &Image) -> Image {
        assert_eq!(self.n, other.n, "image size mismatch");
        Image {
            n: self.n,
            pixels: self.pixels.iter().zip(&other.pixels).map(|(a, b)| a - b).collect(),
        }
    }

    /// `<self, other> = sum self * conj(other)`.
    pub fn inner(&self, other: &Image) -> Complex64 {
        assert_eq!(self.n, other.n, "image size mismatch");
        self.pixels.iter().zip(&other.pixels).map(|(a, b)| a * b.conj()).sum()
    }

    /// `||self - reference|| / ||reference||`.
    pub fn relative_error(&self, reference: &Image) -> f64 {
        let denom = reference.norm_l2();
        let num = self.sub(reference).norm_l2();
        if denom == 0.0 {
            num
        } else {
            num / denom
        }
    }
}

/// Horizontal and vertical forward differences stored compactly.
///
/// `dx` is `(n-1) x n` (differences along `t1`), `dy` is `n x (n-1)`
/// (differences along `t2`), both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    n: usize,
    pub dx: Vec<Complex64>,
    pub dy: Vec<Complex64>,
}

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            dx: vec![Complex64::new(0.0, 0.0); (n - 1) * n],
            dy: vec![Complex64::new(0.0, 0.0); n * (n - 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx_at(&self, t1: usize, t2: usize) -> Complex64 {
        self.dx[t1 * self.n + t2]
    }

    #[inline]
    pub fn dy_at(&self, t1: usize, t2: usize) -> Complex64 {
        self.dy[t1 * (self.n - 1) + t2]
    }

    /// Compact storage: `dx` entries then `dy` entries.
    pub fn flatten(&self) -> Vec<Complex64> {
        self.dx.iter().chain(&self.dy).copied().collect()
    }

    /// Zero-padded `n x n x 2` view, indexed `[(t1 * n + t2) * 2 + component]`.
    pub fn padded(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * 2];
        for t1 in 0..n - 1 {
            for t2 in 0..n {
                out[(t1 * n + t2) * 2] = self.dx_at(t1, t2);
            }
        }
        for t1 in 0..n {
            for t2 in 0..n - 1 {
                out[(t1 * n + t2) * 2 + 1] = self.dy_at(t1, t2);
            }
        }
        out
    }

    pub fn l1(&self) -> f64 {
        self.dx.iter().chain(&self.dy).map(|z| z.norm()).sum()
    }

    pub fn nonzeros(&self, tol: f64) -> usize {
        self.dx.iter().chain(&self.dy).filter(|z| z.norm() > tol).count()
    }
}

pub fn gradient(f: &Image) -> GradientField {
    let n = f.n();
    let px = f.pixels();
    let mut g = GradientField::zeros(n);
    for t1 in 0..n - 1 {
        let (row, next) = (&px[t1 * n..(t1 + 1) * n], &px[(t1 + 1) * n..(t1 + 2) * n]);
        for t2 in 0..n {
            g.dx[t1 * n + t2] = next[t2] - row[t2];
        }
    }
    for t1 in 0..n {
        let row = &px[t1 * n..(t1 + 1) * n];
        for t2 in 0..n - 1 {
            g.dy[t1 * (n - 1) + t2] = row[t2 + 1] - row[t2];
        }
    }
    g
}

/// Adjoint of [`gradient`] (negative divergence).
pub fn gradient_adjoint(g: &GradientField) -> Image {
    let n = g.n();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for t1 in 0..n - 1 {
        for t2 in 0..n {
            let v = g.dx[t1 * n + t2];
            out[(t1 + 1) * n + t2] += v;
            out[t1 * n + t2] -= v;
        }
    }
    for t1 in 0..n {
        for t2 in 0..n - 1 {
            let v = g.dy[t1 * (n - 1) + t2];
            out[t1 * n + t2 + 1] += v;
            out[t1 * n + t2] -= v;
        }
    }
    Image { n, pixels: out }
}

/// Anisotropic total variation `sum |f_x| + |f_y|`.
pub fn tv_norm(f: &Image) -> f64 {
    gradient(f).l1()
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `l_p` norm for `p >= 1`; `p = f64::INFINITY` gives the max modulus.
pub fn lp_norm(x: &[Complex64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(if p.is_infinite() {
        x.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else if p == 1.0 {
        x.iter().map(|z| z.norm()).sum()
    } else if p == 2.0 {
        l2(x)
    } else {
        x.iter().map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

/// Indices of the `s` largest-magnitude entries; equal magnitudes keep the
/// lower index first.
pub fn largest_indices(x: &[Complex64], s: usize) -> Result<Vec<usize>> {
    if s > x.len() {
        return Err(Error::SparsityOutOfRange { s, len: x.len() });
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].norm()
            .partial_cmp(&x[a].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(s);
    Ok(order)
}

/// Keeps the `s` largest-magnitude entries and zeroes the rest.
pub fn hard_threshold(x: &[Complex64], s: usize) -> Result<Vec<Complex64>> {
    let keep = largest_indices(x, s)?;
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for i in keep {
        out[i] = x[i];
    }
    Ok(out)
}

/// `sigma_s(x)_p`, the `l_p` error of the best `s`-term approximation.
pub fn best_s_term_error(x: &[Complex64], s: usize, p: f64) -> Result<f64> {
    let approx = hard_threshold(x, s)?;
    let residual: Vec<Complex64> = x.iter().zip(&approx).map(|(a, b)| a - b).collect();
    lp_norm(&residual, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_image(n: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(Image::zeros(3), Err(Error::InvalidSize(3)));
        assert_eq!(Image::zeros(1), Err(Error::InvalidSize(1)));
        assert!(Image::from_real(4, &[0.0; 15]).is_err());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = Image::constant(8, Complex64::new(2.5, -1.0)).unwrap();
        let g = gradient(&f);
        assert!(g.flatten().iter().all(|z| *z == c(0.0)));
        assert_eq!(tv_norm(&f), 0.0);
    }

    #[test]
    fn gradient_of_ramp() {
        let f = Image::from_fn(8, |t1, _| c(t1 as f64)).unwrap();
        let g = gradient(&f);
        assert!(g.dx.iter().all(|z| *z == c(1.0)));
        assert!(g.dy.iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn gradient_matches_double_loop() {
        let f = random_image(4, 3);
        let g = gradient(&f);
        let padded = g.padded();
        for t1 in 0..4 {
            for t2 in 0..4 {
                let fx = if t1 + 1 < 4 {
                    f.get(t1 + 1, t2) - f.get(t1, t2)
                } else {
                    c(0.0)
                };
                let fy = if t2 + 1 < 4 {
                    f.get(t1, t2 + 1) - f.get(t1, t2)
                } else {
                    c(0.0)
                };
                assert_eq!(padded[(t1 * 4 + t2) * 2], fx);
                assert_eq!(padded[(t1 * 4 + t2) * 2 + 1], fy);
            }
        }
        assert_eq!(g.dx.len(), 12);
        assert_eq!(g.dy.len(), 12);
    }

    #[test]
    fn tv_of_two_by_two() {
        // rows [0, 1] and [0, 1]: two unit jumps along t2
        let f = Image::from_real(2, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tv_norm(&f), 2.0);
    }

    #[test]
    fn tv_matches_brute_force() {
        let f = random_image(8, 11);
        let mut brute = 0.0;
        for t1 in 0..8 {
            for t2 in 0..8 {
                if t1 + 1 < 8 {
                    brute += (f.get(t1 + 1, t2) - f.get(t1, t2)).norm();
                }
                if t2 + 1 < 8 {
                    brute += (f.get(t1, t2 + 1) - f.get(t1, t2)).norm();
                }
            }
        }
        let tv = tv_norm(&f);
        assert!((tv - brute).abs() <= 1e-12 * brute);
        assert_eq!(tv, lp_norm(&gradient(&f).flatten(), 1.0).unwrap());
    }

    #[test]
    fn gradient_adjoint_identity() {
        let f = random_image(8, 5);
        let h = random_image(8, 6);
        let gh = gradient(&h);
        let lhs: Complex64 = gradient(&f)
            .flatten()
            .iter()
            .zip(gh.flatten())
            .map(|(a, b)| a * b.conj())
            .sum();
        let rhs = f.inner(&gradient_adjoint(&gh));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn lp_norm_cases() {
        assert_eq!(lp_norm(&[c(0.0); 5], 1.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&[c(0.0); 5], f64::INFINITY).unwrap(), 0.0);
        assert_eq!(lp_norm(&[c(3.0), c(4.0)], 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[c(3.0), c(-4.0)], f64::INFINITY).unwrap(), 4.0);
        assert!((lp_norm(&[c(3.0), c(4.0)], 3.0).unwrap() - 91f64.cbrt()).abs() < 1e-12);
        assert_eq!(lp_norm(&[c(1.0)], 0.5), Err(Error::InvalidExponent(0.5)));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut sum = 0.0;
        for z in &x {
            sum += (z.re * z.re + z.im * z.im).sqrt();
        }
        assert!((lp_norm(&x, 1.0).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn hard_threshold_cases() {
        let x = [c(1.0), c(-5.0), c(3.0), c(3.0)];
        assert_eq!(hard_threshold(&x, 4).unwrap(), x.to_vec());
        assert_eq!(hard_threshold(&x, 0).unwrap(), vec![c(0.0); 4]);
        assert_eq!(hard_threshold(&x, 2).unwrap(), vec![c(0.0), c(-5.0), c(3.0), c(0.0)]);
        assert_eq!(hard_threshold(&x, 5), Err(Error::SparsityOutOfRange { s: 5, len: 4 }));
    }

    #[test]
    fn best_s_term_cases() {
        let x = [c(4.0), c(2.0), c(1.0)];
        assert_eq!(best_s_term_error(&x, 1, 1.0).unwrap(), 3.0);
        let sparse = [c(0.0), c(2.0), c(0.0), c(-1.0)];
        assert_eq!(best_s_term_error(&sparse, 2, 1.0).unwrap(), 0.0);
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = combinations(n - 1, k);
        for mut c in combinations(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }

    fn brute_sigma(x: &[Complex64], s: usize, p: f64) -> f64 {
        combinations(x.len(), s)
            .into_iter()
            .map(|support| {
                let rest: Vec<Complex64> = (0..x.len()).filter(|i| !support.contains(i)).map(|i| x[i]).collect();
                lp_norm(&rest, p).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn best_s_term_matches_exhaustive_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<Complex64> = (0..9).map(|_| c(rng.random_range(-3.0..3.0))).collect();
        let fast = best_s_term_error(&x, 3, 1.0).unwrap();
        let brute = brute_sigma(&x, 3, 1.0);
        assert!((fast - brute).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn tv_invariances(seed in 0u64..1000, shift in -5.0f64..5.0, alpha_re in -3.0f64..3.0, alpha_im in -3.0f64..3.0) {
            let f = random_image(8, seed);
            let tv = tv_norm(&f);
            let shifted = tv_norm(&f.shifted(Complex64::new(shift, 0.0)));
            prop_assert!((tv - shifted).abs() <= 1e-9 * tv.max(1.0));
            let alpha = Complex64::new(alpha_re, alpha_im);
            let scaled = tv_norm(&f.scaled(alpha));
            prop_assert!((scaled - alpha.norm() * tv).abs() <= 1e-9 * tv.max(1.0));
        }

        #[test]
        fn threshold_is_best_sparse_approximation(
            values in proptest::collection::vec(-4i32..4, 1..=12),
            s_frac in 0.0f64..=1.0,
            p in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)],
        ) {
            let x: Vec<Complex64> = values.iter().map(|&v| c(v as f64)).collect();
            let s = ((x.len() as f64) * s_frac).floor() as usize;
            let kept = hard_threshold(&x, s).unwrap();
            prop_assert!(kept.iter().filter(|z| z.norm() > 0.0).count() <= s);
            let err = best_s_term_error(&x, s, p).unwrap();
            prop_assert!((err - brute_sigma(&x, s, p)).abs() < 1e-12);
            let mut prev = f64::INFINITY;
            for k in 0..=x.len() {
                let e = best_s_term_error(&x, k, p).unwrap();
                prop_assert!(e <= prev);
                prev = e;
            }
            prop_assert_eq!(prev, 0.0);
        }
    }
}
