//! Ridge-line skeletons of inwards distance maps.

use crate::distance::{inwards, DistanceMap};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// The ridge of a silhouette's inwards distance map, always a subset of the
/// silhouette it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Skeleton {
    mask: BinaryMask,
}

impl Skeleton {
    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn into_mask(self) -> BinaryMask {
        self.mask
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

/// Max of `dist` over the 3x3 window centred at `(x, y)`, clipped to the image.
pub(crate) fn window_max(dist: &DistanceMap, x: usize, y: usize) -> u32 {
    let (w, h) = dist.dims();
    let mut best = 0;
    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            best = best.max(dist.get(nx, ny));
        }
    }
    best
}

/// Distance-to-topology: keep mask pixels whose distance equals the local
/// 3x3 maximum.
///
/// `ReLU(D - maxpool(D) + 1)` is 1 exactly where `D == maxpool(D)` because
/// the map is integer valued, so the predicate is evaluated directly.
pub fn d2t(dist: &DistanceMap, mask: &BinaryMask) -> Result<Skeleton> {
    if dist.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            left: dist.dims(),
            right: mask.dims(),
        });
    }
    let (w, h) = mask.dims();
    let mask = BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y) && dist.get(x, y) == window_max(dist, x, y)
    })?;
    Ok(Skeleton { mask })
}

/// `d2t(s2d(mask), mask)` with a background border.
pub fn skeletonize(mask: &BinaryMask) -> Skeleton {
    d2t(&inwards(mask), mask).expect("dimensions match by construction")
}
