mod common;

use proptest::prelude::*;
use sitopo::distance::{
    erode_once, erode_once_with, erosion_sum, inwards, outwards, s2d, s2d_oracle, BorderPolicy, ErosionRule,
};
use sitopo::mask::BinaryMask;

fn has_zero(m: &BinaryMask) -> bool {
    m.count_ones() < m.width() * m.height()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn s2d_matches_oracle_with_background_border(m in common::any_mask(40, 40)) {
        let fast = s2d(&m, BorderPolicy::BACKGROUND).unwrap();
        prop_assert_eq!(&fast, &s2d_oracle(&m, BorderPolicy::BACKGROUND).unwrap());
        prop_assert_eq!(&fast, &erosion_sum(&m, BorderPolicy::BACKGROUND).unwrap());
    }

    #[test]
    fn s2d_matches_oracle_with_foreground_border(m in common::any_mask(40, 40)) {
        prop_assume!(has_zero(&m));
        let fast = s2d(&m, BorderPolicy::FOREGROUND).unwrap();
        prop_assert_eq!(&fast, &s2d_oracle(&m, BorderPolicy::FOREGROUND).unwrap());
        prop_assert_eq!(&fast, &erosion_sum(&m, BorderPolicy::FOREGROUND).unwrap());
    }

    #[test]
    fn erosion_shrinks(m in common::any_mask(30, 30), fg in any::<bool>()) {
        let policy = BorderPolicy { outside_value: fg };
        let eroded = erode_once(&m, policy);
        prop_assert!(eroded.is_subset_of(&m));
        prop_assert!(eroded.values().iter().all(|&v| v <= 1));
        let literal = erode_once_with(&m, policy, ErosionRule::EightOfNine);
        prop_assert!(literal.values().iter().all(|&v| v <= 1));
    }

    #[test]
    fn positive_distance_marks_the_mask(m in common::any_mask(30, 30)) {
        let d = inwards(&m);
        for (v, b) in d.values().iter().zip(m.values()) {
            prop_assert_eq!(*v >= 1, *b == 1);
        }
    }

    #[test]
    fn outwards_vanishes_exactly_on_the_target(m in common::any_mask(30, 30)) {
        prop_assume!(!m.is_empty());
        let d = outwards(&m).unwrap();
        for (v, b) in d.values().iter().zip(m.values()) {
            prop_assert_eq!(*v == 0, *b == 1);
        }
    }

    #[test]
    fn erosion_terminates_within_bound(m in common::any_mask(30, 30), fg in any::<bool>()) {
        let policy = BorderPolicy { outside_value: fg };
        prop_assume!(!fg || has_zero(&m));
        let (w, h) = m.dims();
        let bound = if fg { w.max(h) } else { w.min(h).div_ceil(2) };
        let mut cur = m.clone();
        let mut steps = 0;
        while !cur.is_empty() {
            cur = erode_once(&cur, policy);
            steps += 1;
        }
        prop_assert!(steps <= bound, "{steps} steps > {bound}");
    }

    #[test]
    fn translation_covariance(
        core in common::noise_mask(10, 10),
        a in (10usize..18, 10usize..18),
        b in (10usize..18, 10usize..18),
    ) {
        let (cw, ch) = core.dims();
        let place = |ox: usize, oy: usize| {
            BinaryMask::from_fn(40, 40, |x, y| {
                x >= ox && y >= oy && x - ox < cw && y - oy < ch && core.get(x - ox, y - oy)
            })
            .unwrap()
        };
        let (ma, mb) = (place(a.0, a.1), place(b.0, b.1));
        let (da, db) = (inwards(&ma), inwards(&mb));
        for y in 0..ch {
            for x in 0..cw {
                prop_assert_eq!(da.get(a.0 + x, a.1 + y), db.get(b.0 + x, b.1 + y));
            }
        }
        prop_assert_eq!(da.max_value(), db.max_value());
    }
}

#[test]
fn oracle_agreement_across_benchmark_sizes() {
    use rand::Rng;
    let mut rng = sitopo::rng::seeded(11);
    for &(w, h) in &[(8, 8), (32, 32), (64, 64), (129, 67)] {
        for _ in 0..20 {
            let p: f64 = rng.gen_range(0.2..0.95);
            let bits = (0..w * h).map(|_| u8::from(rng.gen_bool(p))).collect();
            let m = BinaryMask::from_vec(w, h, bits).unwrap();
            for policy in [BorderPolicy::BACKGROUND, BorderPolicy::FOREGROUND] {
                if policy.outside_value && !has_zero(&m) {
                    continue;
                }
                assert_eq!(s2d(&m, policy).unwrap(), s2d_oracle(&m, policy).unwrap());
            }
        }
    }
}
