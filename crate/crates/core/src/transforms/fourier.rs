//! Orthonormal 2-D DFT and its restriction to sampled frequencies.
//!
//! `phi_{k1,k2}(t1,t2) = e^{2 pi i (t1 k1 + t2 k2)/N} / N` with spatial
//! indices `t in 0..N`, and the transform coefficient at `(k1, k2)` is
//! `<f, phi_{k1,k2}>`. Frequencies live in `-N/2+1 ..= N/2`; the array
//! position of `(k1, k2)` is `(k1 mod N, k2 mod N)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Radix2Fft;
use crate::error::{Error, Result};
use crate::image::{side_exponent, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequencyIndex {
    pub k1: i64,
    pub k2: i64,
}

impl FrequencyIndex {
    pub fn new(n: usize, k1: i64, k2: i64) -> Result<Self> {
        let f = Self { k1, k2 };
        f.check(n)?;
        Ok(f)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        let (lo, hi) = frequency_range(n);
        if (lo..=hi).contains(&self.k1) && (lo..=hi).contains(&self.k2) {
            Ok(())
        } else {
            Err(Error::FrequencyOutOfRange {
                k1: self.k1,
                k2: self.k2,
                n,
            })
        }
    }

    /// Array position `(k1 mod N, k2 mod N)` flattened row-major.
    #[inline]
    pub fn position(&self, n: usize) -> usize {
        let r = self.k1.rem_euclid(n as i64) as usize;
        let c = self.k2.rem_euclid(n as i64) as usize;
        r * n + c
    }

    pub fn from_position(n: usize, pos: usize) -> Self {
        Self {
            k1: wrap(n, pos / n),
            k2: wrap(n, pos % n),
        }
    }

    pub fn radius_sq(&self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn max_abs(&self) -> i64 {
        self.k1.abs().max(self.k2.abs())
    }
}

#[inline]
fn wrap(n: usize, r: usize) -> i64 {
    if r > n / 2 {
        r as i64 - n as i64
    } else {
        r as i64
    }
}

/// Inclusive frequency bounds `(-N/2 + 1, N/2)`.
pub fn frequency_range(n: usize) -> (i64, i64) {
    let h = (n / 2) as i64;
    (-h + 1, h)
}

/// All frequencies in array-position order.
pub fn all_frequencies(n: usize) -> impl Iterator<Item = FrequencyIndex> {
    (0..n * n).map(move |pos| FrequencyIndex::from_position(n, pos))
}

/// Evaluates `phi_{k1,k2}` on the grid.
pub fn fourier_atom(n: usize, k: FrequencyIndex) -> Result<Image> {
    k.check(n)?;
    let nf = n as f64;
    Image::from_fn(n, |t1, t2| {
        let phase = (t1 as i64 * k.k1 + t2 as i64 * k.k2).rem_euclid(n as i64) as f64;
        let a = 2.0 * PI * phase / nf;
        Complex64::new(a.cos(), a.sin()) / nf
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_values(n: usize, values: Vec<Complex64>) -> Result<Self> {
        side_exponent(n)?;
        if values.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: FrequencyIndex) -> Complex64 {
        self.values[k.position(self.n)]
    }

    /// Values in array-position order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Reusable unitary 2-D DFT of one size.
#[derive(Debug, Clone)]
pub struct Dft2 {
    n: usize,
    fft: Radix2Fft,
}

impl Dft2 {
    pub fn new(n: usize) -> Result<Self> {
        side_exponent(n)?;
        Ok(Self {
            n,
            fft: Radix2Fft::new(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            self.fft.process(row, inverse);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            self.fft.process(&mut col, inverse);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
        let scale = 1.0 / n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Pixels to spectrum, in place.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    /// Spectrum to pixels, in place.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }
}

pub fn dft2_forward(f: &Image) -> Spectrum {
    let n = f.n();
    let mut values = f.pixels().to_vec();
    Dft2::new(n)
        .expect("image side is a power of two")
        .forward_in_place(&mut values);
    Spectrum { n, values }
}

pub fn dft2_inverse(spectrum: &Spectrum) -> Image {
    let n = spectrum.n;
    let mut values = spectrum.values.clone();
    Dft2::new(n)
        .expect("spectrum side is a power of two")
        .inverse_in_place(&mut values);
    Image::from_complex(n, values).expect("size preserved")
}

fn check_all(n: usize, freqs: &[FrequencyIndex]) -> Result<()> {
    freqs.iter().try_for_each(|k| k.check(n))
}

/// `y_j = <f, phi_{omega_j}>`, repeated frequencies repeated.
pub fn partial_dft(f: &Image, freqs: &[FrequencyIndex]) -> Result<Vec<Complex64>> {
    let n = f.n();
    check_all(n, freqs)?;
    let spectrum = dft2_forward(f);
    Ok(freqs.iter().map(|k| spectrum.values[k.position(n)]).collect())
}

/// Adjoint of [`partial_dft`]; duplicated frequencies accumulate.
pub fn partial_dft_adjoint(n: usize, y: &[Complex64], freqs: &[FrequencyIndex]) -> Result<Image> {
    side_exponent(n)?;
    if y.len() != freqs.len() {
        return Err(Error::SizeMismatch {
            expected: freqs.len(),
            got: y.len(),
        });
    }
    check_all(n, freqs)?;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, v) in freqs.iter().zip(y) {
        values[k.position(n)] += v;
    }
    Ok(dft2_inverse(&Spectrum { n, values }))
}
