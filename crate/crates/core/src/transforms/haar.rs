//! Univariate and bivariate Haar systems on `2^p` points.
//!
//! Spatial indices run over `0..2^p`. The univariate building blocks are the
//! windows `h^0_{n,l}` (value `2^{(n-p)/2}` on `[l 2^{p-n}, (l+1) 2^{p-n})`)
//! and the steps `h^1_{n,l}` (positive on the first half of that interval,
//! negative on the second). `h^0_{0,0}` is the global constant and
//! `h^1_{0,0}` the global step.
//!
//! Bivariate coefficients are ordered canonically: the constant atom first,
//! then scale `n` ascending, orientation `(0,1), (1,0), (1,1)`, shift
//! `(l1, l2)` row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{side_exponent, Image};

/// Orientation `e = (e1, e2)` of a bivariate detail atom; `e1` acts on `t1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    E01,
    E10,
    E11,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::E01, Orientation::E10, Orientation::E11];

    pub fn pair(self) -> (u8, u8) {
        match self {
            Orientation::E01 => (0, 1),
            Orientation::E10 => (1, 0),
            Orientation::E11 => (1, 1),
        }
    }

    fn rank(self) -> usize {
        match self {
            Orientation::E01 => 0,
            Orientation::E10 => 1,
            Orientation::E11 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaarIndex {
    Constant,
    Detail {
        e: Orientation,
        n: u32,
        l1: usize,
        l2: usize,
    },
}

impl HaarIndex {
    pub fn check(&self, p: u32) -> Result<()> {
        match *self {
            HaarIndex::Constant => Ok(()),
            HaarIndex::Detail { n, l1, l2, .. } => {
                if n < p && l1 < (1 << n) && l2 < (1 << n) {
                    Ok(())
                } else {
                    Err(Error::InvalidHaarIndex(format!("{self:?} for p = {p}")))
                }
            }
        }
    }

    /// Position in the canonical coefficient ordering.
    pub fn position(&self) -> usize {
        match *self {
            HaarIndex::Constant => 0,
            HaarIndex::Detail { e, n, l1, l2 } => {
                let block = 1usize << (2 * n);
                block + e.rank() * block + (l1 << n) + l2
            }
        }
    }

    pub fn from_position(p: u32, pos: usize) -> Result<Self> {
        let total = 1usize << (2 * p);
        if pos >= total {
            return Err(Error::InvalidHaarIndex(format!("position {pos} for p = {p}")));
        }
        if pos == 0 {
            return Ok(HaarIndex::Constant);
        }
        // level n occupies [4^n, 4^{n+1})
        let n = (usize::BITS - 1 - pos.leading_zeros()) / 2;
        let block = 1usize << (2 * n);
        let within = pos - block;
        let e = Orientation::ALL[within / block];
        let rest = within % block;
        Ok(HaarIndex::Detail {
            e,
            n,
            l1: rest >> n,
            l2: rest & ((1 << n) - 1),
        })
    }
}

/// All `4^p` bivariate indices in canonical order.
pub fn all_haar_indices(p: u32) -> impl Iterator<Item = HaarIndex> {
    (0..1usize << (2 * p)).map(move |pos| HaarIndex::from_position(p, pos).expect("in range"))
}

/// Samples of the univariate atom `h^e_{n,l}` on `2^p` points.
pub fn haar_atom_1d(p: u32, e: u8, n: u32, l: usize) -> Result<Vec<f64>> {
    if p == 0 || n >= p || l >= (1 << n) || e > 1 {
        return Err(Error::InvalidHaarIndex(format!(
            "univariate e = {e}, n = {n}, l = {l} for p = {p}"
        )));
    }
    let len = 1usize << p;
    let width = 1usize << (p - n);
    let amp = 2f64.powf((n as f64 - p as f64) / 2.0);
    let start = l * width;
    let mut out = vec![0.0; len];
    for (t, v) in out.iter_mut().enumerate().skip(start).take(width) {
        *v = if e == 1 && t >= start + width / 2 { -amp } else { amp };
    }
    Ok(out)
}

/// Samples of the bivariate atom as an image.
pub fn haar_atom_2d(p: u32, idx: HaarIndex) -> Result<Image> {
    side_exponent(1usize << p)?;
    idx.check(p)?;
    let (a, b) = match idx {
        HaarIndex::Constant => (haar_atom_1d(p, 0, 0, 0)?, haar_atom_1d(p, 0, 0, 0)?),
        HaarIndex::Detail { e, n, l1, l2 } => {
            let (e1, e2) = e.pair();
            (haar_atom_1d(p, e1, n, l1)?, haar_atom_1d(p, e2, n, l2)?)
        }
    };
    Image::from_fn(1 << p, |t1, t2| Complex64::new(a[t1] * b[t2], 0.0))
}

/// Bivariate Haar coefficients in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoeffs {
    p: u32,
    coeffs: Vec<Complex64>,
}

impl HaarCoeffs {
    pub fn from_vec(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let p = side_exponent(n)?;
        if coeffs.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: coeffs.len(),
            });
        }
        Ok(Self { p, coeffs })
    }

    pub fn n(&self) -> usize {
        1 << self.p
    }

    pub fn get(&self, idx: HaarIndex) -> Complex64 {
        self.coeffs[idx.position()]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Fast forward transform of a row-major `n x n` array into canonical order.
pub fn haar_forward_slice(n: usize, pixels: &[Complex64], out: &mut [Complex64]) {
    assert_eq!(pixels.len(), n * n);
    assert_eq!(out.len(), n * n);
    let mut approx = pixels.to_vec();
    let mut size = n;
    while size > 1 {
        let half = size / 2;
        let level = half.trailing_zeros();
        let block = half * half;
        let mut next = vec![Complex64::new(0.0, 0.0); block];
        for l1 in 0..half {
            for l2 in 0..half {
                let x00 = approx[(2 * l1) * size + 2 * l2];
                let x01 = approx[(2 * l1) * size + 2 * l2 + 1];
                let x10 = approx[(2 * l1 + 1) * size + 2 * l2];
                let x11 = approx[(2 * l1 + 1) * size + 2 * l2 + 1];
                let l = (l1 << level) + l2;
                next[l] = (x00 + x01 + x10 + x11) * 0.5;
                out[block + l] = (x00 - x01 + x10 - x11) * 0.5;
                out[2 * block + l] = (x00 + x01 - x10 - x11) * 0.5;
                out[3 * block + l] = (x00 - x01 - x10 + x11) * 0.5;
            }
        }
        approx = next;
        size = half;
    }
    out[0] = approx[0];
}

/// Inverse of [`haar_forward_slice`].
pub fn haar_inverse_slice(n: usize, coeffs: &[Complex64], out: &mut [Complex64]) {
    assert_eq!(coeffs.len(), n * n);
    assert_eq!(out.len(), n * n);
    let mut approx = vec![coeffs[0]];
    let mut half = 1;
    while half < n {
        let size = 2 * half;
        let level = half.trailing_zeros();
        let block = half * half;
        let mut next = vec![Complex64::new(0.0, 0.0); size * size];
        for l1 in 0..half {
            for l2 in 0..half {
                let l = (l1 << level) + l2;
                let a = approx[l];
                let d01 = coeffs[block + l];
                let d10 = coeffs[2 * block + l];
                let d11 = coeffs[3 * block + l];
                next[(2 * l1) * size + 2 * l2] = (a + d01 + d10 + d11) * 0.5;
                next[(2 * l1) * size + 2 * l2 + 1] = (a - d01 + d10 - d11) * 0.5;
                next[(2 * l1 + 1) * size + 2 * l2] = (a + d01 - d10 - d11) * 0.5;
                next[(2 * l1 + 1) * size + 2 * l2 + 1] = (a - d01 - d10 + d11) * 0.5;
            }
        }
        approx = next;
        half = size;
    }
    out.copy_from_slice(&approx);
}

pub fn haar_forward(f: &Image) -> HaarCoeffs {
    let n = f.n();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
    haar_forward_slice(n, f.pixels(), &mut coeffs);
    HaarCoeffs {
        p: f.scale_exponent(),
        coeffs,
    }
}

pub fn haar_inverse(w: &HaarCoeffs) -> Image {
    let n = w.n();
    let mut pixels = vec![Complex64::new(0.0, 0.0); n * n];
    haar_inverse_slice(n, &w.coeffs, &mut pixels);
    Image::from_complex(n, pixels).expect("size preserved")
}

/// Dense Haar matrix: row `i` is the atom at canonical position `i`,
/// flattened row-major. Intended for small `p`.
pub fn haar_matrix(p: u32) -> Result<Vec<Vec<f64>>> {
    all_haar_indices(p)
        .map(|idx| haar_atom_2d(p, idx).map(|img| img.real_part()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(n: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn univariate_global_atoms() {
        let h0 = haar_atom_1d(2, 0, 0, 0).unwrap();
        assert_eq!(h0, vec![0.5; 4]);
        let h1 = haar_atom_1d(2, 1, 0, 0).unwrap();
        assert_eq!(h1, vec![0.5, 0.5, -0.5, -0.5]);
        let p3 = haar_atom_1d(3, 0, 0, 0).unwrap();
        assert!(p3.iter().all(|&v| (v - 2f64.powf(-1.5)).abs() < 1e-15));
    }

    #[test]
    fn univariate_case_formula() {
        // p = 3, e = 1, n = 1, l = 1: support [4, 8), positive on [4, 6)
        let h = haar_atom_1d(3, 1, 1, 1).unwrap();
        let amp = 2f64.powf((1.0 - 3.0) / 2.0);
        for (t, v) in h.iter().enumerate() {
            let t = t as f64;
            let expected = if (4.0..6.0).contains(&t) {
                amp
            } else if (6.0..8.0).contains(&t) {
                -amp
            } else {
                0.0
            };
            assert_eq!(*v, expected);
        }
        assert!(haar_atom_1d(3, 1, 3, 0).is_err());
        assert!(haar_atom_1d(3, 1, 1, 2).is_err());
        assert!(haar_atom_1d(3, 2, 1, 0).is_err());
    }

    #[test]
    fn bivariate_atoms() {
        let c = haar_atom_2d(3, HaarIndex::Constant).unwrap();
        assert!(c.pixels().iter().all(|z| (z.re - 0.125).abs() < 1e-15));
        for idx in all_haar_indices(3) {
            let a = haar_atom_2d(3, idx).unwrap();
            assert!((a.norm_l2() - 1.0).abs() < 1e-12);
        }
        let idx = HaarIndex::Detail {
            e: Orientation::E11,
            n: 0,
            l1: 0,
            l2: 0,
        };
        let a = haar_atom_2d(2, idx).unwrap();
        let h1 = [0.5, 0.5, -0.5, -0.5];
        for t1 in 0..4 {
            for t2 in 0..4 {
                assert_eq!(a.get(t1, t2).re, h1[t1] * h1[t2]);
            }
        }
        assert!(haar_atom_2d(
            2,
            HaarIndex::Detail {
                e: Orientation::E01,
                n: 2,
                l1: 0,
                l2: 0
            }
        )
        .is_err());
    }

    #[test]
    fn tensor_consistency() {
        let p = 3;
        for idx in all_haar_indices(p) {
            let atom = haar_atom_2d(p, idx).unwrap();
            let (a, b) = match idx {
                HaarIndex::Constant => (haar_atom_1d(p, 0, 0, 0).unwrap(), haar_atom_1d(p, 0, 0, 0).unwrap()),
                HaarIndex::Detail { e, n, l1, l2 } => {
                    let (e1, e2) = e.pair();
                    (haar_atom_1d(p, e1, n, l1).unwrap(), haar_atom_1d(p, e2, n, l2).unwrap())
                }
            };
            for (t1, x) in a.iter().enumerate() {
                for (t2, y) in b.iter().enumerate() {
                    assert_eq!(atom.get(t1, t2).re, x * y);
                }
            }
        }
    }

    #[test]
    fn canonical_positions_round_trip() {
        for p in 1..=4 {
            let indices: Vec<HaarIndex> = all_haar_indices(p).collect();
            assert_eq!(indices.len(), 1 << (2 * p));
            for (i, idx) in indices.iter().enumerate() {
                assert_eq!(idx.position(), i);
                idx.check(p).unwrap();
            }
        }
        assert_eq!(
            HaarIndex::from_position(2, 5).unwrap(),
            HaarIndex::Detail {
                e: Orientation::E01,
                n: 1,
                l1: 0,
                l2: 1
            }
        );
    }

    #[test]
    fn dense_matrix_is_orthonormal() {
        for p in 1..=4 {
            let h = haar_matrix(p).unwrap();
            let mut worst: f64 = 0.0;
            for (i, a) in h.iter().enumerate() {
                for (j, b) in h.iter().enumerate() {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            assert!(worst <= 1e-12, "p = {p}: {worst}");
        }
    }

    #[test]
    fn fast_transform_matches_dense_matrix() {
        for p in 1..=4u32 {
            let n = 1usize << p;
            let h = haar_matrix(p).unwrap();
            let f = random_image(n, p as u64);
            let w = haar_forward(&f);
            for (i, row) in h.iter().enumerate() {
                let dense: Complex64 = row.iter().zip(f.pixels()).map(|(a, b)| b * a).sum();
                assert!((dense - w.as_slice()[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_at_one_one_for_p_one() {
        let mut f = Image::zeros(2).unwrap();
        f.set(1, 1, Complex64::new(1.0, 0.0));
        let w = haar_forward(&f);
        let h = haar_matrix(1).unwrap();
        for (c, row) in w.as_slice().iter().zip(&h) {
            assert!((c.re - row[3]).abs() < 1e-15);
        }
        assert_eq!(w.as_slice()[3].re, 0.5);
    }

    #[test]
    fn constant_image_has_single_coefficient() {
        let c = Complex64::new(0.3, 0.1);
        let w = haar_forward(&Image::constant(16, c).unwrap());
        assert!((w.get(HaarIndex::Constant) - c * 16.0).norm() < 1e-12);
        assert!(w.as_slice()[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn round_trip_and_parseval() {
        let f = random_image(8, 77);
        let w = haar_forward(&f);
        assert!((w.norm_l2() - f.norm_l2()).abs() <= 1e-12 * f.norm_l2());
        assert!(haar_inverse(&w).relative_error(&f) <= 1e-12);
        let g = random_image(64, 78);
        assert!(haar_inverse(&haar_forward(&g)).relative_error(&g) <= 1e-12);
        assert!(HaarCoeffs::from_vec(8, vec![Complex64::new(0.0, 0.0); 63]).is_err());
    }
}
