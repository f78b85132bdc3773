use proptest::prelude::*;
use sitopo::body::{
    forward_kinematics, joint_lipschitz_bound, rasterize, BodyParams, Camera, ParamGroup, LIMB_RADIUS, NUM_PARAMS,
    TORSO_RADIUS,
};
use sitopo::mask::BinaryMask;

const CANVAS: (usize, usize) = (128, 128);

fn params() -> impl Strategy<Value = BodyParams> {
    (
        proptest::array::uniform10(-1.0f64..=1.0),
        proptest::array::uniform3(0.7f64..1.3),
        -0.6f64..0.6,
        0.6f64..1.3,
        proptest::array::uniform2(-15.0f64..15.0),
    )
        .prop_map(|(phi, beta, alpha, s, t)| BodyParams::new(phi, beta, Camera { alpha, s, t }))
}

fn flip_horizontal(m: &BinaryMask) -> BinaryMask {
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| m.get(w - 1 - x, y)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn mirroring_params_mirrors_the_silhouette(p in params()) {
        let mask = rasterize(&p, CANVAS);
        prop_assert_eq!(rasterize(&p.mirrored(), CANVAS), flip_horizontal(&mask));
        prop_assert_eq!(p.mirrored().mirrored(), p);
    }

    #[test]
    fn joints_lie_in_the_dilated_silhouette(p in params()) {
        let mask = rasterize(&p, CANVAS);
        let pts = mask.active_points();
        let reach = TORSO_RADIUS.max(LIMB_RADIUS) * CANVAS.1 as f64 * p.camera().s * p.beta()[1].max(p.beta()[2]);
        for j in forward_kinematics(&p, CANVAS).joints {
            if j[0] < 0.0 || j[1] < 0.0 || j[0] >= 128.0 || j[1] >= 128.0 {
                continue;
            }
            let near = pts.iter().any(|q| {
                let (dx, dy) = (q.x as f64 + 0.5 - j[0], q.y as f64 + 0.5 - j[1]);
                (dx * dx + dy * dy).sqrt() <= reach
            });
            prop_assert!(near, "joint {j:?} farther than {reach} from the mask");
        }
    }

    #[test]
    fn joints_move_within_the_lipschitz_bound(p in params(), index in 0..NUM_PARAMS, delta in -0.05f64..0.05) {
        let mut v = p.to_vector();
        let (lo, hi) = ParamGroup::of(index).bounds();
        prop_assume!(v[index] + delta >= lo && v[index] + delta <= hi);
        v[index] += delta;
        let moved = BodyParams::from_vector(&v);
        let (a, b) = (forward_kinematics(&p, CANVAS), forward_kinematics(&moved, CANVAS));
        let bound = joint_lipschitz_bound(&p, CANVAS, index) * delta.abs() + 1e-9;
        for (ja, jb) in a.joints.iter().zip(&b.joints) {
            let d = ((ja[0] - jb[0]).powi(2) + (ja[1] - jb[1]).powi(2)).sqrt();
            prop_assert!(d <= bound, "param {index}: moved {d} > {bound}");
        }
    }

    #[test]
    fn integer_translation_shifts_the_silhouette(p in params(), dx in -5i32..=5, dy in -5i32..=5) {
        let shifted = {
            let c = *p.camera();
            BodyParams::new(*p.phi(), *p.beta(), Camera { t: [c.t[0] + f64::from(dx), c.t[1] + f64::from(dy)], ..c })
        };
        let (a, b) = (rasterize(&p, CANVAS), rasterize(&shifted, CANVAS));
        let mut mismatches = 0;
        for y in 8..120 {
            for x in 8..120 {
                let src = a.get((x as i32 - dx) as usize, (y as i32 - dy) as usize);
                mismatches += usize::from(src != b.get(x, y));
            }
        }
        // only pixel centres within rounding of a capsule boundary may flip
        prop_assert!(mismatches <= 2, "{mismatches} pixels disagree");
    }
}

#[test]
fn canonical_figure_is_mirror_symmetric() {
    let p = BodyParams::canonical();
    assert_eq!(p.mirrored(), p);
    let mask = rasterize(&p, CANVAS);
    assert_eq!(flip_horizontal(&mask), mask);
}
