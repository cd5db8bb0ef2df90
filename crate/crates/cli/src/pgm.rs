//! Binary (P5) and ASCII (P2) PGM at 8 or 16 bits per sample.

use std::path::Path;

use localcoh::{Complex64, Image};

#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("not a PGM file (expected P2 or P5 magic)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    Header(String),
    #[error("PGM raster truncated: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleRange { value: u32, maxval: u16 },
    #[error("image must be square with a power-of-two side, got {width}x{height}")]
    NotSquarePow2 { width: usize, height: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grayscale raster with samples in `0..=maxval`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::Header(format!("missing or invalid {what}")))
    }
}

impl Pgm {
    pub fn parse(bytes: &[u8]) -> Result<Self, PgmError> {
        let binary = match bytes.get(..2) {
            Some(b"P5") => true,
            Some(b"P2") => false,
            _ => return Err(PgmError::BadMagic),
        };
        let mut cur = Cursor { bytes, pos: 2 };
        let width = cur.number("width")? as usize;
        let height = cur.number("height")? as usize;
        let maxval = cur.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(PgmError::Header("zero dimension".into()));
        }
        if !(1..=65535).contains(&maxval) {
            return Err(PgmError::Header(format!("maxval {maxval} outside 1..=65535")));
        }
        let maxval = maxval as u16;
        let count = width * height;
        let mut data = Vec::with_capacity(count);
        if binary {
            // exactly one whitespace byte separates the header from the raster
            if !cur.bytes.get(cur.pos).is_some_and(|c| c.is_ascii_whitespace()) {
                return Err(PgmError::Header("missing whitespace after maxval".into()));
            }
            let raster = &bytes[cur.pos + 1..];
            let wide = maxval > 255;
            let needed = if wide { 2 * count } else { count };
            if raster.len() < needed {
                return Err(PgmError::Truncated {
                    expected: count,
                    found: if wide { raster.len() / 2 } else { raster.len() },
                });
            }
            if wide {
                data.extend(
                    raster[..needed]
                        .chunks_exact(2)
                        .map(|b| u16::from_be_bytes([b[0], b[1]])),
                );
            } else {
                data.extend(raster[..needed].iter().map(|b| *b as u16));
            }
        } else {
            for found in 0..count {
                cur.skip_space_and_comments();
                if cur.pos >= bytes.len() {
                    return Err(PgmError::Truncated { expected: count, found });
                }
                let v = cur.number("sample")?;
                if v > u16::MAX as u32 {
                    return Err(PgmError::SampleRange { value: v, maxval });
                }
                data.push(v as u16);
            }
        }
        if let Some(v) = data.iter().find(|v| **v > maxval) {
            return Err(PgmError::SampleRange {
                value: *v as u32,
                maxval,
            });
        }
        Ok(Self {
            width,
            height,
            maxval,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self, PgmError> {
        Self::parse(&std::fs::read(path)?)
    }

    /// P5 encoding; two bytes per sample (big-endian) when `maxval > 255`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            for v in &self.data {
                out.extend_from_slice(&v.to_be_bytes());
            }
        } else {
            out.extend(self.data.iter().map(|v| *v as u8));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), PgmError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_image(&self) -> Result<Image, PgmError> {
        if self.width != self.height || !self.width.is_power_of_two() || self.width < 2 {
            return Err(PgmError::NotSquarePow2 {
                width: self.width,
                height: self.height,
            });
        }
        let scale = 1.0 / self.maxval as f64;
        let values: Vec<f64> = self.data.iter().map(|v| *v as f64 * scale).collect();
        Image::from_real(self.width, &values).map_err(|_| PgmError::NotSquarePow2 {
            width: self.width,
            height: self.height,
        })
    }

    /// Real part clipped to `[0, 1]` and quantized to `maxval` levels.
    pub fn from_image(img: &Image, maxval: u16) -> Self {
        let m = maxval as f64;
        let data = img
            .pixels()
            .iter()
            .map(|z: &Complex64| (z.re.clamp(0.0, 1.0) * m).round() as u16)
            .collect();
        Self {
            width: img.n(),
            height: img.n(),
            maxval,
            data,
        }
    }
}
