//! Alignment objectives between masks, point sets and keypoints.
//!
//! [`spatial_chamfer`] never converts a mask into a point set: each side is
//! weighted by the other side's outwards distance map and summed. It equals
//! the two-way L∞ point-set Chamfer distance exactly, which
//! [`chamfer_pointset_linf`] computes the slow way.

use serde::{Deserialize, Serialize};

use crate::distance::{outwards, DistanceMap};
use crate::error::{Error, Result};
use crate::mask::{BinaryMask, GrayMap, PixelPoint};

/// A loss with its size-normalised companion `raw / (|A| + |B|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossValue {
    pub raw: f64,
    pub normalized: f64,
}

impl LossValue {
    pub fn new(raw: f64, size: f64) -> Self {
        let normalized = if raw == 0.0 || size <= 0.0 {
            0.0
        } else {
            raw / size
        };
        Self { raw, normalized }
    }

    pub fn get(&self, normalized: bool) -> f64 {
        if normalized {
            self.normalized
        } else {
            self.raw
        }
    }
}

fn check_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

fn two_way(a: &[PixelPoint], b: &[PixelPoint], dist: impl Fn(PixelPoint, PixelPoint) -> u64) -> Result<LossValue> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let one_way = |from: &[PixelPoint], to: &[PixelPoint]| -> u64 {
        from.iter()
            .map(|&p| to.iter().map(|&q| dist(p, q)).min().unwrap_or(0))
            .sum()
    };
    let raw = one_way(a, b) + one_way(b, a);
    Ok(LossValue::new(raw as f64, (a.len() + b.len()) as f64))
}

/// Two-way Chamfer distance with squared Euclidean point distances.
pub fn chamfer_pointset(a: &[PixelPoint], b: &[PixelPoint]) -> Result<LossValue> {
    two_way(a, b, PixelPoint::sq_euclid)
}

/// Two-way Chamfer distance with (unsquared) L∞ point distances.
pub fn chamfer_pointset_linf(a: &[PixelPoint], b: &[PixelPoint]) -> Result<LossValue> {
    two_way(a, b, PixelPoint::linf)
}

/// `|outwards(Y) ⊙ X|_1 + |outwards(X) ⊙ Y|_1`.
pub fn spatial_chamfer(x: &BinaryMask, y: &BinaryMask) -> Result<LossValue> {
    check_same_dims(x.dims(), y.dims())?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyMask("spatial chamfer operand"));
    }
    let to_y = outwards(y)?;
    let to_x = outwards(x)?;
    let masked_sum = |dist: &[u32], mask: &[u8]| -> u64 {
        dist.iter()
            .zip(mask)
            .map(|(&d, &m)| u64::from(d) * u64::from(m))
            .sum()
    };
    let raw = masked_sum(to_y.values(), x.values()) + masked_sum(to_x.values(), y.values());
    Ok(LossValue::new(
        raw as f64,
        (x.count_ones() + y.count_ones()) as f64,
    ))
}

/// One side of [`spatial_chamfer`] with its outwards map precomputed, for
/// scoring many predictions against a fixed target.
#[derive(Debug, Clone)]
pub struct ChamferTarget {
    mask: BinaryMask,
    outwards: DistanceMap,
}

impl ChamferTarget {
    pub fn new(mask: BinaryMask) -> Result<Self> {
        let outwards = outwards(&mask)?;
        Ok(Self { mask, outwards })
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    /// Same value as `spatial_chamfer(self.mask(), pred)`.
    pub fn loss(&self, pred: &BinaryMask) -> Result<LossValue> {
        check_same_dims(self.mask.dims(), pred.dims())?;
        if pred.is_empty() {
            return Err(Error::EmptyMask("spatial chamfer operand"));
        }
        let to_pred = outwards(pred)?;
        let mut raw = 0u64;
        for ((&d_target, &d_pred), (&t, &p)) in self
            .outwards
            .values()
            .iter()
            .zip(to_pred.values())
            .zip(self.mask.values().iter().zip(pred.values()))
        {
            raw += u64::from(d_target) * u64::from(p) + u64::from(d_pred) * u64::from(t);
        }
        Ok(LossValue::new(
            raw as f64,
            (self.mask.count_ones() + pred.count_ones()) as f64,
        ))
    }
}

/// Pixelwise squared difference of two masks: the size of their symmetric
/// difference.
pub fn pixel_l2(x: &BinaryMask, y: &BinaryMask) -> Result<LossValue> {
    check_same_dims(x.dims(), y.dims())?;
    let raw = x
        .values()
        .iter()
        .zip(y.values())
        .filter(|(a, b)| a != b)
        .count();
    Ok(LossValue::new(
        raw as f64,
        (x.count_ones() + y.count_ones()) as f64,
    ))
}

/// Pixelwise squared difference of two grayscale maps, normalised by their
/// summed intensity.
pub fn pixel_l2_gray(x: &GrayMap, y: &GrayMap) -> Result<LossValue> {
    check_same_dims(x.dims(), y.dims())?;
    let raw: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mass: f64 = x.values().iter().chain(y.values()).sum();
    Ok(LossValue::new(raw, mass))
}

/// Sum of squared distances between corresponding keypoints.
pub fn keypoint_l2(z: &[[f64; 2]], z_hat: &[[f64; 2]]) -> Result<LossValue> {
    if z.len() != z_hat.len() {
        return Err(Error::LengthMismatch(z.len(), z_hat.len()));
    }
    let raw = z
        .iter()
        .zip(z_hat)
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    Ok(LossValue::new(raw, (2 * z.len()) as f64))
}
