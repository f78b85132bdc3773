#![allow(dead_code)]

use proptest::prelude::*;
use sitopo::mask::BinaryMask;

/// Independent noise masks with a random fill density.
pub fn noise_mask(max_w: usize, max_h: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max_w, 1..=max_h, 0.0f64..=1.0).prop_flat_map(|(w, h, p)| {
        proptest::collection::vec(proptest::bool::weighted(p), w * h).prop_map(move |bits| {
            BinaryMask::from_vec(w, h, bits.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}

/// Unions of random rectangles and discs: silhouette-like shapes with real
/// interiors, unlike noise.
pub fn blob_mask(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    let shape = (0..w, 0..h, 1..=w.max(2) / 2, 1..=h.max(2) / 2, any::<bool>());
    proptest::collection::vec(shape, 1..5).prop_map(move |shapes| {
        BinaryMask::from_fn(w, h, |x, y| {
            shapes.iter().any(|&(cx, cy, rx, ry, disc)| {
                let dx = x as f64 - cx as f64;
                let dy = y as f64 - cy as f64;
                if disc {
                    (dx / rx as f64).powi(2) + (dy / ry as f64).powi(2) <= 1.0
                } else {
                    dx.abs() <= rx as f64 && dy.abs() <= ry as f64
                }
            })
        })
        .unwrap()
    })
}

pub fn any_mask(max_w: usize, max_h: usize) -> impl Strategy<Value = BinaryMask> {
    prop_oneof![
        noise_mask(max_w, max_h),
        (4..=max_w, 4..=max_h).prop_flat_map(|(w, h)| blob_mask(w, h)),
    ]
}

pub fn nonempty_pair(max_w: usize, max_h: usize) -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (4..=max_w, 4..=max_h)
        .prop_flat_map(|(w, h)| {
            let one = prop_oneof![
                noise_mask_sized(w, h),
                blob_mask(w, h),
            ];
            (one.clone(), one)
        })
        .prop_filter("both operands nonempty", |(a, b)| !a.is_empty() && !b.is_empty())
}

pub fn noise_mask_sized(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    (0.0f64..=1.0).prop_flat_map(move |p| {
        proptest::collection::vec(proptest::bool::weighted(p), w * h).prop_map(move |bits| {
            BinaryMask::from_vec(w, h, bits.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}
