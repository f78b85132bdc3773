mod common;

use proptest::prelude::*;
use sitopo::losses::{chamfer_pointset_linf, pixel_l2, spatial_chamfer, ChamferTarget};
use sitopo::mask::BinaryMask;
use sitopo::topology::skeletonize;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn spatial_chamfer_is_the_linf_pointset_chamfer((a, b) in common::nonempty_pair(36, 36)) {
        let spatial = spatial_chamfer(&a, &b).unwrap();
        let oracle = chamfer_pointset_linf(&a.active_points(), &b.active_points()).unwrap();
        prop_assert_eq!(spatial.raw, oracle.raw);
        prop_assert_eq!(spatial.normalized, oracle.normalized);
        prop_assert_eq!(ChamferTarget::new(a.clone()).unwrap().loss(&b).unwrap(), spatial);
    }

    #[test]
    fn equivalence_holds_on_skeletons((a, b) in common::nonempty_pair(36, 36)) {
        let (ta, tb) = (skeletonize(&a).into_mask(), skeletonize(&b).into_mask());
        let spatial = spatial_chamfer(&ta, &tb).unwrap();
        let oracle = chamfer_pointset_linf(&ta.active_points(), &tb.active_points()).unwrap();
        prop_assert_eq!(spatial.raw, oracle.raw);
    }

    #[test]
    fn symmetric_and_zero_only_on_equality((a, b) in common::nonempty_pair(30, 30)) {
        let ab = spatial_chamfer(&a, &b).unwrap();
        prop_assert_eq!(ab, spatial_chamfer(&b, &a).unwrap());
        prop_assert_eq!(ab.raw == 0.0, a == b);
        prop_assert_eq!(spatial_chamfer(&a, &a).unwrap().raw, 0.0);
        prop_assert!(ab.raw >= 0.0 && ab.normalized >= 0.0);
    }

    #[test]
    fn pixel_l2_counts_the_symmetric_difference((a, b) in common::nonempty_pair(30, 30)) {
        let differing = a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count();
        prop_assert_eq!(pixel_l2(&a, &b).unwrap().raw, differing as f64);
    }

    #[test]
    fn separating_singletons_never_lowers_the_loss(
        x in 0usize..40, y in 0usize..40, dx in -3i64..=3, dy in -3i64..=3, k in 1i64..6,
    ) {
        prop_assume!(dx != 0 || dy != 0);
        let point = |px: i64, py: i64| {
            BinaryMask::from_fn(64, 64, |u, v| u as i64 == px + 12 && v as i64 == py + 12).unwrap()
        };
        let anchor = point(x as i64, y as i64);
        let near = point(x as i64 + k * dx, y as i64 + k * dy);
        let far = point(x as i64 + (k + 1) * dx, y as i64 + (k + 1) * dy);
        prop_assume!(!near.is_empty() && !far.is_empty());
        prop_assert!(spatial_chamfer(&anchor, &far).unwrap().raw >= spatial_chamfer(&anchor, &near).unwrap().raw);
    }
}

#[test]
fn empty_operands_are_rejected() {
    let empty = BinaryMask::zeros(4, 4).unwrap();
    let one = BinaryMask::ones(4, 4).unwrap();
    assert!(spatial_chamfer(&empty, &one).is_err());
    assert!(spatial_chamfer(&one, &empty).is_err());
    assert!(spatial_chamfer(&one, &BinaryMask::ones(4, 5).unwrap()).is_err());
}
