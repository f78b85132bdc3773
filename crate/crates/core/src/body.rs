//! A 2D articulated capsule figure: latent pose, shape and a similarity
//! camera, rasterized to a hard silhouette or rendered to a soft image.
//!
//! Image coordinates are used throughout: `x` to the right, `y` down, pixel
//! `(i, j)` centred at `(i + 0.5, j + 0.5)`. Canonical lengths and radii are
//! fractions of the canvas height.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, GrayMap};

pub const NUM_SEGMENTS: usize = 10;
pub const NUM_JOINTS: usize = 11;
pub const NUM_SHAPE: usize = 3;
/// phi (10) + beta (3) + alpha + s + t (2).
pub const NUM_PARAMS: usize = NUM_SEGMENTS + NUM_SHAPE + 4;

pub const BETA_MIN: f64 = 0.5;
pub const BETA_MAX: f64 = 2.0;
pub const SCALE_MIN: f64 = 1e-3;
pub const MEAN_SHAPE: [f64; NUM_SHAPE] = [1.0, 1.0, 1.0];

/// Capsule radius of the torso class (torso and head) as a fraction of height.
pub const TORSO_RADIUS: f64 = 0.05;
/// Capsule radius of the limb class as a fraction of height.
pub const LIMB_RADIUS: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Pelvis,
    Neck,
    HeadTop,
    LElbow,
    LWrist,
    RElbow,
    RWrist,
    LKnee,
    LAnkle,
    RKnee,
    RAnkle,
}

impl Joint {
    pub const ALL: [Joint; NUM_JOINTS] = [
        Joint::Pelvis,
        Joint::Neck,
        Joint::HeadTop,
        Joint::LElbow,
        Joint::LWrist,
        Joint::RElbow,
        Joint::RWrist,
        Joint::LKnee,
        Joint::LAnkle,
        Joint::RKnee,
        Joint::RAnkle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Pelvis => "pelvis",
            Joint::Neck => "neck",
            Joint::HeadTop => "head_top",
            Joint::LElbow => "l_elbow",
            Joint::LWrist => "l_wrist",
            Joint::RElbow => "r_elbow",
            Joint::RWrist => "r_wrist",
            Joint::LKnee => "l_knee",
            Joint::LAnkle => "l_ankle",
            Joint::RKnee => "r_knee",
            Joint::RAnkle => "r_ankle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusClass {
    Torso,
    Limb,
}

#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub name: &'static str,
    pub from: Joint,
    pub to: Joint,
    /// Segment whose accumulated rotation this one inherits.
    pub parent: Option<usize>,
    pub rest_dir: [f64; 2],
    pub rest_length: f64,
    pub radius: RadiusClass,
    pub range: (f64, f64),
    /// +1 for the figure's left side and the midline, -1 for the right side,
    /// so that swapping left/right latents mirrors the figure.
    pub side: f64,
}

const THIGH_SPREAD_SIN: f64 = 0.149_438_132_473_599_2; // sin(0.15)
const THIGH_SPREAD_COS: f64 = 0.988_771_077_936_042_6; // cos(0.15)

/// The kinematic tree. Arms hang off the neck, legs off the pelvis. The
/// head-torso-thigh-shin chain spans 0.8 of the height when straight.
pub const SKELETON: [Segment; NUM_SEGMENTS] = [
    Segment {
        name: "torso",
        from: Joint::Pelvis,
        to: Joint::Neck,
        parent: None,
        rest_dir: [0.0, -1.0],
        rest_length: 0.25,
        radius: RadiusClass::Torso,
        range: (-0.35, 0.35),
        side: 1.0,
    },
    Segment {
        name: "head",
        from: Joint::Neck,
        to: Joint::HeadTop,
        parent: Some(0),
        rest_dir: [0.0, -1.0],
        rest_length: 0.09,
        radius: RadiusClass::Torso,
        range: (-0.4, 0.4),
        side: 1.0,
    },
    Segment {
        name: "l_upper_arm",
        from: Joint::Neck,
        to: Joint::LElbow,
        parent: Some(0),
        rest_dir: [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        rest_length: 0.15,
        radius: RadiusClass::Limb,
        range: (-1.2, 1.2),
        side: 1.0,
    },
    Segment {
        name: "l_forearm",
        from: Joint::LElbow,
        to: Joint::LWrist,
        parent: Some(2),
        rest_dir: [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        rest_length: 0.13,
        radius: RadiusClass::Limb,
        range: (-1.2, 1.2),
        side: 1.0,
    },
    Segment {
        name: "r_upper_arm",
        from: Joint::Neck,
        to: Joint::RElbow,
        parent: Some(0),
        rest_dir: [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        rest_length: 0.15,
        radius: RadiusClass::Limb,
        range: (-1.2, 1.2),
        side: -1.0,
    },
    Segment {
        name: "r_forearm",
        from: Joint::RElbow,
        to: Joint::RWrist,
        parent: Some(4),
        rest_dir: [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        rest_length: 0.13,
        radius: RadiusClass::Limb,
        range: (-1.2, 1.2),
        side: -1.0,
    },
    Segment {
        name: "l_thigh",
        from: Joint::Pelvis,
        to: Joint::LKnee,
        parent: None,
        rest_dir: [THIGH_SPREAD_SIN, THIGH_SPREAD_COS],
        rest_length: 0.25,
        radius: RadiusClass::Limb,
        range: (-0.6, 0.6),
        side: 1.0,
    },
    Segment {
        name: "l_shin",
        from: Joint::LKnee,
        to: Joint::LAnkle,
        parent: Some(6),
        rest_dir: [THIGH_SPREAD_SIN, THIGH_SPREAD_COS],
        rest_length: 0.21,
        radius: RadiusClass::Limb,
        range: (-0.8, 0.8),
        side: 1.0,
    },
    Segment {
        name: "r_thigh",
        from: Joint::Pelvis,
        to: Joint::RKnee,
        parent: None,
        rest_dir: [-THIGH_SPREAD_SIN, THIGH_SPREAD_COS],
        rest_length: 0.25,
        radius: RadiusClass::Limb,
        range: (-0.6, 0.6),
        side: -1.0,
    },
    Segment {
        name: "r_shin",
        from: Joint::RKnee,
        to: Joint::RAnkle,
        parent: Some(8),
        rest_dir: [-THIGH_SPREAD_SIN, THIGH_SPREAD_COS],
        rest_length: 0.21,
        radius: RadiusClass::Limb,
        range: (-0.8, 0.8),
        side: -1.0,
    },
];

/// Similarity camera: rotate by `alpha`, scale by `s`, then shift by `t`
/// relative to the canvas centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub alpha: f64,
    pub s: f64,
    pub t: [f64; 2],
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            s: 1.0,
            t: [0.0, 0.0],
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    phi: [f64; NUM_SEGMENTS],
    beta: [f64; NUM_SHAPE],
    camera: Camera,
}

/// Latent pose, shape and camera. Construction clamps every field into its
/// box, so a value of this type always satisfies the invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct BodyParams {
    phi: [f64; NUM_SEGMENTS],
    beta: [f64; NUM_SHAPE],
    camera: Camera,
}

impl TryFrom<RawParams> for BodyParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let finite = raw
            .phi
            .iter()
            .chain(&raw.beta)
            .chain([&raw.camera.alpha, &raw.camera.s])
            .chain(&raw.camera.t)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("non-finite body parameter".into()));
        }
        if raw.camera.s <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "camera scale must be positive, got {}",
                raw.camera.s
            )));
        }
        Ok(BodyParams::new(raw.phi, raw.beta, raw.camera))
    }
}

impl Default for BodyParams {
    fn default() -> Self {
        Self::canonical()
    }
}

impl BodyParams {
    pub fn new(phi: [f64; NUM_SEGMENTS], beta: [f64; NUM_SHAPE], camera: Camera) -> Self {
        Self {
            phi: phi.map(|v| v.clamp(-1.0, 1.0)),
            beta: beta.map(|v| v.clamp(BETA_MIN, BETA_MAX)),
            camera: Camera {
                s: camera.s.max(SCALE_MIN),
                ..camera
            },
        }
    }

    /// Mean pose, mean shape, identity camera.
    pub fn canonical() -> Self {
        Self::new([0.0; NUM_SEGMENTS], MEAN_SHAPE, Camera::default())
    }

    pub fn phi(&self) -> &[f64; NUM_SEGMENTS] {
        &self.phi
    }

    pub fn beta(&self) -> &[f64; NUM_SHAPE] {
        &self.beta
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    /// Flat layout: `phi[0..10], beta[10..13], alpha, s, t.x, t.y`.
    pub fn to_vector(&self) -> [f64; NUM_PARAMS] {
        let mut v = [0.0; NUM_PARAMS];
        v[..NUM_SEGMENTS].copy_from_slice(&self.phi);
        v[NUM_SEGMENTS..NUM_SEGMENTS + NUM_SHAPE].copy_from_slice(&self.beta);
        v[13] = self.camera.alpha;
        v[14] = self.camera.s;
        v[15] = self.camera.t[0];
        v[16] = self.camera.t[1];
        v
    }

    /// Inverse of [`to_vector`](Self::to_vector), clamping into the boxes.
    pub fn from_vector(v: &[f64; NUM_PARAMS]) -> Self {
        let mut phi = [0.0; NUM_SEGMENTS];
        phi.copy_from_slice(&v[..NUM_SEGMENTS]);
        let mut beta = [0.0; NUM_SHAPE];
        beta.copy_from_slice(&v[NUM_SEGMENTS..NUM_SEGMENTS + NUM_SHAPE]);
        Self::new(
            phi,
            beta,
            Camera {
                alpha: v[13],
                s: v[14],
                t: [v[15], v[16]],
            },
        )
    }

    /// The mirror image about the vertical axis through the canvas centre:
    /// left and right latents swap, midline latents and `alpha` flip sign.
    pub fn mirrored(&self) -> Self {
        let mut phi = self.phi;
        phi.swap(2, 4);
        phi.swap(3, 5);
        phi.swap(6, 8);
        phi.swap(7, 9);
        phi[0] = -phi[0];
        phi[1] = -phi[1];
        Self::new(
            phi,
            self.beta,
            Camera {
                alpha: -self.camera.alpha,
                s: self.camera.s,
                t: [-self.camera.t[0], self.camera.t[1]],
            },
        )
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Which box a flat parameter index lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Phi,
    Beta,
    Alpha,
    Scale,
    Translation,
}

impl ParamGroup {
    pub fn of(index: usize) -> ParamGroup {
        match index {
            0..=9 => ParamGroup::Phi,
            10..=12 => ParamGroup::Beta,
            13 => ParamGroup::Alpha,
            14 => ParamGroup::Scale,
            15 | 16 => ParamGroup::Translation,
            _ => panic!("parameter index {index} out of range"),
        }
    }

    /// Closed interval the coordinate is clamped to.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            ParamGroup::Phi => (-1.0, 1.0),
            ParamGroup::Beta => (BETA_MIN, BETA_MAX),
            ParamGroup::Scale => (SCALE_MIN, f64::INFINITY),
            ParamGroup::Alpha | ParamGroup::Translation => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Affine latent decoder: `phi = -1 -> lo`, `phi = 0 -> midpoint`, `phi = 1 -> hi`.
pub fn decode_pose(phi: &[f64; NUM_SEGMENTS]) -> [f64; NUM_SEGMENTS] {
    let mut angles = [0.0; NUM_SEGMENTS];
    for (j, seg) in SKELETON.iter().enumerate() {
        let p = phi[j].clamp(-1.0, 1.0);
        let (lo, hi) = seg.range;
        angles[j] = lo + (p + 1.0) / 2.0 * (hi - lo);
    }
    angles
}

/// Joint positions in pixel coordinates, indexed by [`Joint::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub joints: [[f64; 2]; NUM_JOINTS],
}

impl Pose2D {
    pub fn get(&self, joint: Joint) -> [f64; 2] {
        self.joints[joint.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.joints.iter().flatten().all(|v| v.is_finite())
    }
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Joints relative to the pelvis, before the camera, in pixels.
fn body_frame_joints(params: &BodyParams, height: f64) -> [[f64; 2]; NUM_JOINTS] {
    let angles = decode_pose(&params.phi);
    let mut joints = [[0.0; 2]; NUM_JOINTS];
    let mut world_angle = [0.0; NUM_SEGMENTS];
    for (j, seg) in SKELETON.iter().enumerate() {
        let inherited = seg.parent.map_or(0.0, |p| world_angle[p]);
        world_angle[j] = inherited + seg.side * angles[j];
        let dir = rotate(seg.rest_dir, world_angle[j]);
        let len = seg.rest_length * height * params.beta[0];
        let start = joints[seg.from.index()];
        joints[seg.to.index()] = [start[0] + len * dir[0], start[1] + len * dir[1]];
    }
    joints
}

pub fn forward_kinematics(params: &BodyParams, canvas: (usize, usize)) -> Pose2D {
    let (w, h) = (canvas.0 as f64, canvas.1 as f64);
    let cam = &params.camera;
    let centre = [w / 2.0 + cam.t[0], h / 2.0 + cam.t[1]];
    let joints = body_frame_joints(params, h).map(|p| {
        let r = rotate(p, cam.alpha);
        [cam.s * r[0] + centre[0], cam.s * r[1] + centre[1]]
    });
    Pose2D { joints }
}

/// A posed capsule in pixel coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Capsule {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub radius: f64,
}

impl Capsule {
    /// Euclidean distance from `p` to the segment `a-b`.
    pub fn axis_distance(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (self.b[0] - self.a[0], self.b[1] - self.a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p[0] - self.a[0]) * dx + (p[1] - self.a[1]) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (cx, cy) = (self.a[0] + t * dx, self.a[1] + t * dy);
        ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
    }

    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.axis_distance(p) - self.radius
    }
}

pub fn capsules(params: &BodyParams, canvas: (usize, usize)) -> [Capsule; NUM_SEGMENTS] {
    let pose = forward_kinematics(params, canvas);
    let h = canvas.1 as f64;
    let s = params.camera.s;
    SKELETON.map(|seg| {
        let radius = match seg.radius {
            RadiusClass::Torso => TORSO_RADIUS * h * s * params.beta[1],
            RadiusClass::Limb => LIMB_RADIUS * h * s * params.beta[2],
        };
        Capsule {
            a: pose.get(seg.from),
            b: pose.get(seg.to),
            radius,
        }
    })
}

/// Signed distance from `p` to the union of capsules (negative inside).
pub fn signed_distance(caps: &[Capsule], p: [f64; 2]) -> f64 {
    caps.iter()
        .map(|c| c.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Hard silhouette: a pixel is on iff its centre lies within some capsule.
pub fn rasterize(params: &BodyParams, canvas: (usize, usize)) -> BinaryMask {
    let (w, h) = canvas;
    let mut mask = BinaryMask::zeros(w, h).expect("canvas must be non-empty");
    for cap in capsules(params, canvas) {
        let lo_x = cap.a[0].min(cap.b[0]) - cap.radius - 1.0;
        let hi_x = cap.a[0].max(cap.b[0]) + cap.radius + 1.0;
        let lo_y = cap.a[1].min(cap.b[1]) - cap.radius - 1.0;
        let hi_y = cap.a[1].max(cap.b[1]) + cap.radius + 1.0;
        if hi_x < 0.0 || hi_y < 0.0 || lo_x >= w as f64 || lo_y >= h as f64 {
            continue;
        }
        let x0 = lo_x.max(0.0).floor() as usize;
        let x1 = (hi_x.ceil().max(0.0) as usize).min(w);
        let y0 = lo_y.max(0.0).floor() as usize;
        let y1 = (hi_y.ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                if cap.axis_distance(p) <= cap.radius {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

/// Foreground/background levels and edge softness for [`render_image`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderStyle {
    pub fg: f64,
    pub bg: f64,
    /// Logistic edge width in pixels.
    pub softness: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            fg: 0.75,
            bg: 0.25,
            softness: 0.75,
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Soft grayscale rendering `bg + (fg - bg) * sigmoid(-d / softness)`.
pub fn render_image(params: &BodyParams, canvas: (usize, usize), style: &RenderStyle) -> GrayMap {
    let (w, h) = canvas;
    let caps = capsules(params, canvas);
    let tau = style.softness.max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let d = signed_distance(&caps, [x as f64 + 0.5, y as f64 + 0.5]);
            values.push(style.bg + (style.fg - style.bg) * logistic(-d / tau));
        }
    }
    GrayMap::from_vec(w, h, values).expect("canvas must be non-empty")
}

/// Upper bound on how far any joint moves per unit change of flat parameter
/// `index` around `params`.
///
/// Every lever arm is at most the sum of all bone lengths `L` (in pixels, at
/// the current shape and scale), so: a latent moves joints by at most
/// `L * half_range`, `alpha` by `L`, `s` by `L / s`, the length scale by
/// `L / beta_0`, a translation by 1, and the width scales not at all. The
/// bound holds for perturbations small enough that `s` and `beta_0` stay
/// within a factor of two of their current values.
pub fn joint_lipschitz_bound(params: &BodyParams, canvas: (usize, usize), index: usize) -> f64 {
    let h = canvas.1 as f64;
    let total: f64 = SKELETON.iter().map(|s| s.rest_length).sum::<f64>() * h;
    let s = params.camera.s;
    let reach = total * params.beta[0] * s;
    match index {
        0..=9 => {
            let (lo, hi) = SKELETON[index].range;
            // half range, doubled for the factor-of-two margin on s and beta
            2.0 * reach * (hi - lo) / 2.0
        }
        10 => 2.0 * total * s,
        11 | 12 => 0.0,
        13 => 2.0 * reach,
        14 => 2.0 * total * params.beta[0],
        15 | 16 => 1.0,
        _ => panic!("parameter index {index} out of range"),
    }
}
