//! Binary masks, grayscale maps and PGM (P2/P5) I/O.
//!
//! Every grid in this crate is stored row-major: `y` outer, `x` inner, so
//! the pixel `(x, y)` lives at index `y * width + x`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pixel location: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: usize,
    pub y: usize,
}

impl PixelPoint {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Chebyshev distance `max(|dx|, |dy|)`.
    pub fn linf(self, other: PixelPoint) -> u64 {
        let dx = self.x.abs_diff(other.x);
        let dy = self.y.abs_diff(other.y);
        dx.max(dy) as u64
    }

    /// Squared Euclidean distance.
    pub fn sq_euclid(self, other: PixelPoint) -> u64 {
        let dx = self.x.abs_diff(other.x) as u64;
        let dy = self.y.abs_diff(other.y) as u64;
        dx * dx + dy * dy
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

/// A `width x height` grid of bits. Silhouettes and skeletons both use it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![0; width * height],
        })
    }

    pub fn ones(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![1; width * height],
        })
    }

    /// Builds a mask from row-major values; any nonzero entry is stored as 1.
    pub fn from_vec(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::LengthMismatch(values.len(), width * height));
        }
        let values = values.into_iter().map(|v| u8::from(v != 0)).collect();
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a mask from nested rows, mostly for tests and fixtures.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::LengthMismatch(row.len(), width));
            }
            values.extend_from_slice(row);
        }
        Self::from_vec(width, height, values)
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(u8::from(f(x, y)));
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x] != 0
    }

    /// Like [`get`](Self::get) but out-of-range coordinates read as `outside`.
    pub fn get_or(&self, x: isize, y: isize, outside: bool) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            outside
        } else {
            self.get(x as usize, y as usize)
        }
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.values[y * self.width + x] = u8::from(value);
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// `1 - mask`, pixelwise.
    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// Row-major list of active pixels.
    pub fn active_points(&self) -> Vec<PixelPoint> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| PixelPoint::new(i % self.width, i / self.width))
            .collect()
    }

    /// True when every active pixel of `self` is active in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(&a, &b)| a <= b)
    }

    pub fn to_gray(&self) -> GrayMap {
        GrayMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    /// Loads a PGM and thresholds it at 0.5.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        binarize(&load_pgm(path)?, 0.5)
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        for row in self.values.chunks(self.width) {
            let line: String = row.iter().map(|&v| if v != 0 { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// A grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayMap {
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![value.clamp(0.0, 1.0); width * height],
        })
    }

    /// Builds a map from row-major values, clamping each into `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::LengthMismatch(values.len(), width * height));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Quantizes to 8 bits the way [`save_pgm`] does.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// Thresholds a grayscale map: `out(u) = 1` iff `map(u) >= threshold`.
pub fn binarize(map: &GrayMap, threshold: f64) -> Result<BinaryMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(BinaryMask {
        width: map.width,
        height: map.height,
        values: map.values.iter().map(|&v| u8::from(v >= threshold)).collect(),
    })
}

/// Anything that can be written as an 8-bit PGM.
pub trait PgmImage {
    fn pgm_dims(&self) -> (usize, usize);
    fn pgm_bytes(&self) -> Vec<u8>;
}

impl PgmImage for GrayMap {
    fn pgm_dims(&self) -> (usize, usize) {
        self.dims()
    }

    fn pgm_bytes(&self) -> Vec<u8> {
        self.to_bytes()
    }
}

impl PgmImage for BinaryMask {
    fn pgm_dims(&self) -> (usize, usize) {
        self.dims()
    }

    fn pgm_bytes(&self) -> Vec<u8> {
        self.values.iter().map(|&v| v * 255).collect()
    }
}

/// Encodes an image as binary P5 with maxval 255.
pub fn encode_pgm(image: &impl PgmImage) -> Vec<u8> {
    let (w, h) = image.pgm_dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.pgm_bytes());
    out
}

pub fn save_pgm(image: &impl PgmImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(image))
        .map_err(|e| Error::io(path, e))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
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

    fn next_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

/// Decodes a P2 (ASCII) or P5 (binary) graymap, scaling samples by `1/maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayMap> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader {
            offset: 0,
            reason: "missing magic number".into(),
        });
    }
    let ascii = match &bytes[..2] {
        b"P2" => true,
        b"P5" => false,
        other => {
            return Err(Error::UnsupportedMagic {
                magic: String::from_utf8_lossy(other).into_owned(),
                offset: 0,
            })
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.next_uint("width")?;
    let height = cur.next_uint("height")?;
    let maxval_offset = cur.pos;
    let maxval = cur.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader {
            offset: 2,
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader {
            offset: maxval_offset,
            reason: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let n = width
        .checked_mul(height)
        .ok_or(Error::InvalidDimensions { width, height })?;
    let scale = 1.0 / maxval as f64;
    let mut values = Vec::with_capacity(n);

    if ascii {
        for i in 0..n {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(Error::TruncatedPayload {
                    offset: cur.pos,
                    expected: n,
                    found: i,
                });
            }
            let offset = cur.pos;
            let v = cur.next_uint("sample")?;
            if v > maxval {
                return Err(Error::MalformedHeader {
                    offset,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            values.push(v as f64 * scale);
        }
    } else {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(Error::MalformedHeader {
                    offset: cur.pos,
                    reason: "expected whitespace after maxval".into(),
                })
            }
        }
        let sample_bytes = if maxval > 255 { 2 } else { 1 };
        let payload = &bytes[cur.pos..];
        let found = payload.len() / sample_bytes;
        if found < n {
            return Err(Error::TruncatedPayload {
                offset: bytes.len(),
                expected: n,
                found,
            });
        }
        for i in 0..n {
            let v = if sample_bytes == 2 {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as usize
            } else {
                payload[i] as usize
            };
            values.push((v as f64 * scale).min(1.0));
        }
    }
    GrayMap::from_vec(width, height, values)
}
