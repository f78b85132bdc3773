//! Chebyshev (L∞) distance maps built by recursive 3x3 erosion.
//!
//! The inwards map of a mask is `D = S_0 + S_1 + ... + S_l` where
//! `S_0 = mask` and `S_{i+1} = erode(S_i)`; each pixel accumulates one unit
//! per erosion it survives, which is exactly its L∞ distance to the nearest
//! background pixel. The outwards map is the inwards map of the complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, GrayMap};

/// Value assumed for every pixel beyond the image border during erosion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BorderPolicy {
    pub outside_value: bool,
}

impl BorderPolicy {
    /// The world outside the image is background (zero padding).
    pub const BACKGROUND: BorderPolicy = BorderPolicy {
        outside_value: false,
    };
    /// The world outside the image is foreground; only in-image zeros count.
    pub const FOREGROUND: BorderPolicy = BorderPolicy {
        outside_value: true,
    };
}

/// Which survival rule a single erosion step applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErosionRule {
    /// Survive iff the whole closed 3x3 window is active.
    #[default]
    Strict,
    /// `clamp(ReLU(N * S - (n^2 - 2)), 0, 1)` with an all-ones 3x3 kernel: at
    /// least 8 of the 9 window cells active. Not a subset operation (it fills
    /// one-pixel holes), kept for side-by-side comparison only.
    #[serde(rename = "paper-literal")]
    EightOfNine,
}

impl ErosionRule {
    pub fn name(self) -> &'static str {
        match self {
            ErosionRule::Strict => "strict",
            ErosionRule::EightOfNine => "paper-literal",
        }
    }
}

impl std::str::FromStr for ErosionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(ErosionRule::Strict),
            "paper-literal" => Ok(ErosionRule::EightOfNine),
            other => Err(Error::InvalidConfig(format!("unknown erosion rule {other:?}"))),
        }
    }
}

/// Per-pixel non-negative integer distances.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    values: Vec<u32>,
}

impl DistanceMap {
    pub fn from_vec(width: usize, height: usize, values: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(Error::LengthMismatch(values.len(), width * height));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let values: Vec<u32> = rows.iter().flat_map(|r| r.as_ref().to_vec()).collect();
        Self::from_vec(width, height, values)
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

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[y * self.width + x]
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Rescales to `[0, 1]` with the maximum mapped to 1 (all-zero stays zero).
    pub fn render(&self) -> GrayMap {
        let max = self.max_value().max(1) as f64;
        let values = self.values.iter().map(|&v| v as f64 / max).collect();
        GrayMap::from_vec(self.width, self.height, values).expect("dims already validated")
    }
}

impl std::fmt::Debug for DistanceMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "DistanceMap {}x{}", self.width, self.height)?;
        for row in self.values.chunks(self.width) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:3}")).collect();
            writeln!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn window_count(mask: &BinaryMask, x: usize, y: usize, outside: bool) -> u32 {
    let mut count = u32::from(mask.get(x, y));
    for (dx, dy) in NEIGHBOURS {
        count += u32::from(mask.get_or(x as isize + dx, y as isize + dy, outside));
    }
    count
}

/// One strict erosion step: a pixel survives iff it and all 8 neighbours are active.
pub fn erode_once(mask: &BinaryMask, policy: BorderPolicy) -> BinaryMask {
    erode_once_with(mask, policy, ErosionRule::Strict)
}

pub fn erode_once_with(mask: &BinaryMask, policy: BorderPolicy, rule: ErosionRule) -> BinaryMask {
    let (w, h) = mask.dims();
    let threshold = match rule {
        ErosionRule::Strict => 9,
        ErosionRule::EightOfNine => 8,
    };
    BinaryMask::from_fn(w, h, |x, y| {
        let active = mask.get(x, y);
        match rule {
            ErosionRule::Strict if !active => false,
            _ => window_count(mask, x, y, policy.outside_value) >= threshold,
        }
    })
    .expect("dims already validated")
}

fn check_terminates(mask: &BinaryMask, policy: BorderPolicy) -> Result<()> {
    if policy.outside_value && mask.values().iter().all(|&v| v != 0) {
        return Err(Error::NonTerminating);
    }
    Ok(())
}

/// Sums the erosion sequence `S_0, S_1, ...` until it empties.
///
/// Each step is a literal [`erode_once`] over the whole grid, so this costs
/// `O(l * W * H)`; [`s2d`] computes the same sum incrementally.
pub fn erosion_sum(mask: &BinaryMask, policy: BorderPolicy) -> Result<DistanceMap> {
    erosion_sum_with(mask, policy, ErosionRule::Strict)
}

/// [`erosion_sum`] under an explicit rule.
///
/// `EightOfNine` can revive background pixels, so its sequence is not
/// guaranteed to empty; it is truncated after `max(W, H) + 1` steps.
pub fn erosion_sum_with(
    mask: &BinaryMask,
    policy: BorderPolicy,
    rule: ErosionRule,
) -> Result<DistanceMap> {
    check_terminates(mask, policy)?;
    let (w, h) = mask.dims();
    let mut acc = vec![0u32; w * h];
    let mut current = mask.clone();
    let cap = w.max(h) + 1;
    let mut steps = 0;
    while !current.is_empty() && steps <= cap {
        for (a, &v) in acc.iter_mut().zip(current.values()) {
            *a += u32::from(v);
        }
        current = erode_once_with(&current, policy, rule);
        steps += 1;
    }
    DistanceMap::from_vec(w, h, acc)
}

/// Silhouette-to-distance transform with the strict erosion rule.
///
/// Erosion `i + 1` removes exactly the surviving pixels that touch a pixel
/// removed by erosion `i`, so the sum is accumulated by peeling frontiers
/// rather than re-scanning the grid after each step.
pub fn s2d(mask: &BinaryMask, policy: BorderPolicy) -> Result<DistanceMap> {
    check_terminates(mask, policy)?;
    let (w, h) = mask.dims();
    let mut alive: Vec<bool> = mask.values().iter().map(|&v| v != 0).collect();
    let mut dist = vec![0u32; w * h];
    let mut queued = vec![false; w * h];

    let mut frontier = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && window_count(mask, x, y, policy.outside_value) < 9 {
                frontier.push(y * w + x);
                queued[y * w + x] = true;
            }
        }
    }

    let mut level = 1u32;
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &i in &frontier {
            dist[i] = level;
            alive[i] = false;
        }
        for &i in &frontier {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if alive[j] && !queued[j] {
                    queued[j] = true;
                    next.push(j);
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
        level += 1;
    }
    DistanceMap::from_vec(w, h, dist)
}

/// [`s2d`] under an explicit erosion rule.
pub fn s2d_with(mask: &BinaryMask, policy: BorderPolicy, rule: ErosionRule) -> Result<DistanceMap> {
    match rule {
        ErosionRule::Strict => s2d(mask, policy),
        ErosionRule::EightOfNine => erosion_sum_with(mask, policy, rule),
    }
}

/// Direct minimisation of the L∞ distance from each active pixel to the
/// nearest zero pixel, no erosion involved. `O((W*H)^2)`.
pub fn s2d_oracle(mask: &BinaryMask, policy: BorderPolicy) -> Result<DistanceMap> {
    check_terminates(mask, policy)?;
    let (w, h) = mask.dims();
    let zeros: Vec<(usize, usize)> = mask
        .invert()
        .active_points()
        .into_iter()
        .map(|p| (p.x, p.y))
        .collect();
    let mut values = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut best = usize::MAX;
            if !policy.outside_value {
                // nearest pixel beyond the frame
                best = (x + 1).min(y + 1).min(w - x).min(h - y);
            }
            for &(zx, zy) in &zeros {
                let d = x.abs_diff(zx).max(y.abs_diff(zy));
                best = best.min(d);
            }
            values[y * w + x] = best as u32;
        }
    }
    DistanceMap::from_vec(w, h, values)
}

/// Inwards map: distance from each foreground pixel to the background.
pub fn inwards(mask: &BinaryMask) -> DistanceMap {
    s2d(mask, BorderPolicy::BACKGROUND).expect("background border always terminates")
}

/// Outwards map: L∞ distance from each pixel to the nearest active pixel of
/// `target`, zero on the target itself.
pub fn outwards(target: &BinaryMask) -> Result<DistanceMap> {
    if target.is_empty() {
        return Err(Error::EmptyMask("outwards distance to an empty set"));
    }
    s2d(&target.invert(), BorderPolicy::FOREGROUND)
}
