//! Synthetic test images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::Image;
use num_complex::Complex64;

/// Axis-aligned rectangle `[top, top + height) x [left, left + width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub value: f64,
}

/// Sum of rectangle indicators on an `n x n` grid.
pub fn rectangles(n: usize, rects: &[Rect]) -> Result<Image> {
    let mut img = Image::zeros(n)?;
    for r in rects {
        for t1 in r.top..(r.top + r.height).min(n) {
            for t2 in r.left..(r.left + r.width).min(n) {
                let v = img.get(t1, t2);
                img.set(t1, t2, v + Complex64::new(r.value, 0.0));
            }
        }
    }
    Ok(img)
}

/// Two separated interior rectangles on a 32 x 32 grid whose gradient has
/// exactly 40 nonzero entries.
pub fn two_rectangles_32() -> Image {
    rectangles(
        32,
        &[
            Rect {
                top: 5,
                left: 6,
                height: 4,
                width: 6,
                value: 1.0,
            },
            Rect {
                top: 18,
                left: 15,
                height: 6,
                width: 4,
                value: 0.5,
            },
        ],
    )
    .expect("32 is a power of two")
}

/// Ellipse phantom in the spirit of Shepp-Logan, values in `[0, 1]`.
pub fn shepp_logan(n: usize) -> Result<Image> {
    // (intensity, semi-axis a, semi-axis b, center x, center y, angle in degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
        (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
    ];
    let nf = n as f64;
    let mut img = Image::from_fn(n, |t1, t2| {
        let y = 1.0 - (2.0 * t1 as f64 + 1.0) / nf;
        let x = (2.0 * t2 as f64 + 1.0) / nf - 1.0;
        let mut v = 0.0;
        for (intensity, a, b, cx, cy, deg) in ELLIPSES {
            let th = deg.to_radians();
            let (dx, dy) = (x - cx, y - cy);
            let u = dx * th.cos() + dy * th.sin();
            let w = -dx * th.sin() + dy * th.cos();
            if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                v += intensity;
            }
        }
        Complex64::new(v, 0.0)
    })?;
    let max = img.pixels().iter().map(|z| z.re).fold(0.0, f64::max);
    if max > 0.0 {
        img = img.scaled(Complex64::new(1.0 / max, 0.0));
    }
    Ok(img)
}

/// Random piecewise-constant image: `count` rectangles with random extents
/// and intensities, plus a small smooth ramp so the gradient is only
/// compressible rather than exactly sparse.
pub fn random_compressible(n: usize, count: usize, ramp: f64, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rects: Vec<Rect> = (0..count)
        .map(|_| {
            let height = rng.random_range(2..=n / 3);
            let width = rng.random_range(2..=n / 3);
            Rect {
                top: rng.random_range(1..n - height),
                left: rng.random_range(1..n - width),
                height,
                width,
                value: rng.random_range(0.2..1.0),
            }
        })
        .collect();
    let base = rectangles(n, &rects)?;
    let nf = n as f64;
    Image::from_fn(n, |t1, t2| {
        base.get(t1, t2) + Complex64::new(ramp * ((t1 + t2) as f64) / (2.0 * nf), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::gradient;

    #[test]
    fn two_rectangles_gradient_support() {
        let f = two_rectangles_32();
        assert_eq!(gradient(&f).nonzeros(0.0), 40);
    }

    #[test]
    fn shepp_logan_range() {
        let f = shepp_logan(64).unwrap();
        let re = f.real_part();
        assert!(re.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        assert!(re.iter().any(|v| *v > 0.5));
    }

    #[test]
    fn random_compressible_is_reproducible() {
        assert_eq!(
            random_compressible(32, 4, 0.1, 3).unwrap(),
            random_compressible(32, 4, 0.1, 3).unwrap()
        );
    }
}
