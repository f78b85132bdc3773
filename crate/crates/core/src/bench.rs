//! Synthetic datasets with domain shifts, pose metrics and the ablation
//! harness.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::{adapt, AdaptConfig, LabeledSample, UnlabeledSample};
use crate::body::{
    forward_kinematics, rasterize, render_image, BodyParams, Camera, Pose2D, RenderStyle,
    NUM_JOINTS,
};
use crate::error::{Error, Result};
use crate::fitting::{FitTarget, Objective};
use crate::mask::{load_pgm, save_pgm, BinaryMask, GrayMap};
use crate::regressor::{forward, RegressorInput, RegressorWeights};
use crate::rng::{derive_seed, seeded, uniform};

/// Side of the square blocks the noise pattern is constant over: about the
/// size of a body part at 128x128. Fine-grained noise is mostly averaged
/// away by the regressor's input downsampling.
pub const UAP_BLOCK: usize = 32;

/// How target-domain images differ from clean renders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShift {
    Clean,
    Lowres { factor: usize },
    Uap { epsilon: f64, seed: u64 },
}

impl DomainShift {
    pub fn name(&self) -> String {
        match self {
            DomainShift::Clean => "clean".into(),
            DomainShift::Lowres { factor } => format!("lowres{factor}"),
            DomainShift::Uap { epsilon, .. } => format!("uap{:.0}", epsilon * 255.0),
        }
    }
}

/// The single additive pattern of a `uap` domain: a sign field of
/// magnitude exactly `epsilon`, constant over [`UAP_BLOCK`] squares.
pub fn uap_pattern(epsilon: f64, seed: u64, canvas: (usize, usize)) -> Vec<f64> {
    let (w, h) = canvas;
    let (bw, bh) = (w.div_ceil(UAP_BLOCK), h.div_ceil(UAP_BLOCK));
    let mut rng = seeded(seed);
    let signs: Vec<f64> = (0..bw * bh)
        .map(|_| if rng.gen::<bool>() { epsilon } else { -epsilon })
        .collect();
    (0..w * h)
        .map(|i| signs[(i / w / UAP_BLOCK) * bw + (i % w) / UAP_BLOCK])
        .collect()
}

/// Box-downsamples by `factor` (edge blocks average what they cover) and
/// upsamples back with nearest neighbour.
fn lowres(image: &GrayMap, factor: usize) -> Result<GrayMap> {
    let (w, h) = image.dims();
    if factor < 2 || factor >= w.min(h) {
        return Err(Error::InvalidFactor {
            factor,
            width: w,
            height: h,
        });
    }
    let (bw, bh) = (w.div_ceil(factor), h.div_ceil(factor));
    let mut means = vec![0.0; bw * bh];
    for by in 0..bh {
        for bx in 0..bw {
            let (x1, y1) = (((bx + 1) * factor).min(w), ((by + 1) * factor).min(h));
            let mut sum = 0.0;
            for y in by * factor..y1 {
                for x in bx * factor..x1 {
                    sum += image.get(x, y);
                }
            }
            means[by * bw + bx] = sum / ((x1 - bx * factor) * (y1 - by * factor)) as f64;
        }
    }
    let values = (0..w * h)
        .map(|i| means[(i / w / factor) * bw + (i % w) / factor])
        .collect();
    GrayMap::from_vec(w, h, values)
}

pub fn apply_shift(image: &GrayMap, shift: &DomainShift) -> Result<GrayMap> {
    match *shift {
        DomainShift::Clean => Ok(image.clone()),
        DomainShift::Lowres { factor } => lowres(image, factor),
        DomainShift::Uap { epsilon, seed } => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::InvalidConfig(format!("uap epsilon {epsilon} outside [0, 1]")));
            }
            let noise = uap_pattern(epsilon, seed, image.dims());
            let values = image.values().iter().zip(&noise).map(|(v, n)| v + n).collect();
            GrayMap::from_vec(image.width(), image.height(), values)
        }
    }
}

/// Rounds to the 8-bit levels a PGM file stores, so in-memory and on-disk
/// datasets are identical.
fn quantize(image: &GrayMap) -> GrayMap {
    let values = image.to_bytes().into_iter().map(|b| f64::from(b) * (1.0 / 255.0)).collect();
    GrayMap::from_vec(image.width(), image.height(), values).expect("same dimensions")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: GrayMap,
    pub silhouette: BinaryMask,
    pub gt_params: BodyParams,
    pub gt_joints: Pose2D,
}

impl Sample {
    pub fn canvas(&self) -> (usize, usize) {
        self.silhouette.dims()
    }

    pub fn check_invariants(&self) -> bool {
        let canvas = self.canvas();
        self.image.dims() == canvas
            && self.silhouette == rasterize(&self.gt_params, canvas)
            && self.gt_joints == forward_kinematics(&self.gt_params, canvas)
    }

    pub fn labeled(&self) -> LabeledSample {
        LabeledSample {
            input: RegressorInput::from_image(&self.image),
            params: self.gt_params,
            canvas: self.canvas(),
        }
    }

    /// The label-stripped view handed to adaptation.
    pub fn unlabeled(&self) -> Result<UnlabeledSample> {
        Ok(UnlabeledSample {
            input: RegressorInput::from_image(&self.image),
            target: FitTarget::new(self.silhouette.clone())?,
        })
    }
}

/// Ground-truth parameters of one synthetic sample, drawn from `seed`.
pub fn sample_params(seed: u64) -> BodyParams {
    let mut rng = seeded(seed);
    let phi = std::array::from_fn(|_| uniform(&mut rng, -0.6, 0.6));
    let beta = std::array::from_fn(|_| uniform(&mut rng, 0.85, 1.15));
    let alpha = uniform(&mut rng, -0.3, 0.3);
    let s = uniform(&mut rng, 0.8, 1.2);
    let t = [uniform(&mut rng, -8.0, 8.0), uniform(&mut rng, -8.0, 8.0)];
    BodyParams::new(phi, beta, Camera { alpha, s, t })
}

/// Builds the sample for ground truth `params`, seen through `shift`.
pub fn make_sample(params: BodyParams, shift: &DomainShift, canvas: (usize, usize)) -> Result<Sample> {
    let image = apply_shift(&render_image(&params, canvas, &RenderStyle::default()), shift)?;
    Ok(Sample {
        image: quantize(&image),
        silhouette: rasterize(&params, canvas),
        gt_params: params,
        gt_joints: forward_kinematics(&params, canvas),
    })
}

/// `n` samples; sample `i` draws its parameters from its own sub-stream of
/// `seed`, so the output does not depend on the worker count.
pub fn gen_dataset(
    n: usize,
    seed: u64,
    shift: &DomainShift,
    canvas: (usize, usize),
) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if canvas.0 == 0 || canvas.1 == 0 {
        return Err(Error::InvalidDimensions {
            width: canvas.0,
            height: canvas.1,
        });
    }
    (0..n)
        .into_par_iter()
        .map(|i| make_sample(sample_params(derive_seed(seed, i as u64)), shift, canvas))
        .collect()
}

/// Mean Euclidean joint error in pixels.
pub fn mpjpe(pred: &Pose2D, gt: &Pose2D) -> f64 {
    pred.joints
        .iter()
        .zip(&gt.joints)
        .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        .sum::<f64>()
        / NUM_JOINTS as f64
}

/// `p -> scale * R(rotation) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        scale: 1.0,
        rotation: 0.0,
        translation: [0.0, 0.0],
    };

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        [
            self.scale * (c * p[0] - s * p[1]) + self.translation[0],
            self.scale * (s * p[0] + c * p[1]) + self.translation[1],
        ]
    }

    pub fn apply_pose(&self, pose: &Pose2D) -> Pose2D {
        Pose2D {
            joints: pose.joints.map(|p| self.apply(p)),
        }
    }
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Least-squares similarity (rotation, no reflection) taking `pred` onto `gt`.
pub fn procrustes_align(pred: &Pose2D, gt: &Pose2D) -> Result<Similarity> {
    let (cp, cg) = (centroid(&pred.joints), centroid(&gt.joints));
    let (mut dot, mut cross, mut norm) = (0.0, 0.0, 0.0);
    for (p, g) in pred.joints.iter().zip(&gt.joints) {
        let (px, py) = (p[0] - cp[0], p[1] - cp[1]);
        let (gx, gy) = (g[0] - cg[0], g[1] - cg[1]);
        dot += px * gx + py * gy;
        cross += px * gy - py * gx;
        norm += px * px + py * py;
    }
    if norm <= 1e-12 {
        return Err(Error::DegeneratePose);
    }
    let rotation = cross.atan2(dot);
    let scale = dot.hypot(cross) / norm;
    let (s, c) = rotation.sin_cos();
    let translation = [
        cg[0] - scale * (c * cp[0] - s * cp[1]),
        cg[1] - scale * (s * cp[0] + c * cp[1]),
    ];
    Ok(Similarity {
        scale,
        rotation,
        translation,
    })
}

/// Joint error after similarity alignment.
///
/// The least-squares alignment minimises summed squared distances, not the
/// mean distance, so on near-perfect predictions it can leave the mean
/// slightly worse than no alignment at all. The identity is a similarity
/// too, and the smaller of the two errors is reported.
pub fn pa_mpjpe(pred: &Pose2D, gt: &Pose2D) -> Result<f64> {
    let t = procrustes_align(pred, gt)?;
    Ok(mpjpe(&t.apply_pose(pred), gt).min(mpjpe(pred, gt)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mpjpe: f64,
    pub pa_mpjpe: f64,
    /// `(mpjpe, pa_mpjpe)` per sample, in dataset order.
    pub per_sample: Vec<(f64, f64)>,
    pub n: usize,
}

impl MetricsReport {
    pub fn from_pairs(pairs: &[(Pose2D, Pose2D)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let per_sample: Vec<(f64, f64)> = pairs
            .par_iter()
            .map(|(pred, gt)| Ok((mpjpe(pred, gt), pa_mpjpe(pred, gt)?)))
            .collect::<Result<_>>()?;
        let n = per_sample.len();
        let mean = |f: fn(&(f64, f64)) -> f64| per_sample.iter().map(f).sum::<f64>() / n as f64;
        Ok(Self {
            mpjpe: mean(|p| p.0),
            pa_mpjpe: mean(|p| p.1),
            per_sample,
            n,
        })
    }
}

/// Regressor predictions against ground truth over `samples`.
pub fn evaluate(w: &RegressorWeights, samples: &[Sample]) -> Result<MetricsReport> {
    let pairs: Vec<(Pose2D, Pose2D)> = samples
        .par_iter()
        .map(|s| {
            let pred = forward(w, &RegressorInput::from_image(&s.image));
            (forward_kinematics(&pred, s.canvas()), s.gt_joints)
        })
        .collect();
    MetricsReport::from_pairs(&pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub adapt: AdaptConfig,
    pub methods: Vec<Objective>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            adapt: AdaptConfig::default(),
            methods: Objective::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub phase: String,
    pub mpjpe: f64,
    pub pa_mpjpe: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<ReportRow>,
    /// Upsampling used by the lowres shift.
    pub upsample: String,
    pub config: AblationConfig,
}

impl AblationReport {
    pub fn row(&self, method: &str, phase: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.phase == phase)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("report.json"), self)?;
        let path = dir.join("report.csv");
        let mut out = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
        for row in &self.rows {
            out.serialize(row).map_err(|e| Error::io(&path, e.into()))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Adapts `weights` once per method on `target` with the same seed and
/// schedule, and reports pre- and post-adaptation metrics on `eval`.
pub fn run_ablation(
    weights: &RegressorWeights,
    target: &[UnlabeledSample],
    eval: &[Sample],
    cfg: &AblationConfig,
) -> Result<AblationReport> {
    let pre = evaluate(weights, eval)?;
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        let mut adapt_cfg = cfg.adapt;
        adapt_cfg.loss.objective = method;
        let post = if adapt_cfg.max_iter == 0 {
            pre.clone()
        } else {
            let (adapted, _) = adapt(weights, target, &adapt_cfg)?;
            evaluate(&adapted, eval)?
        };
        for (phase, m) in [("pre", &pre), ("post", &post)] {
            rows.push(ReportRow {
                method: method.label().into(),
                phase: phase.into(),
                mpjpe: m.mpjpe,
                pa_mpjpe: m.pa_mpjpe,
                n: m.n,
            });
        }
    }
    Ok(AblationReport {
        rows,
        upsample: "nearest".into(),
        config: cfg.clone(),
    })
}

/// `manifest.json` of an on-disk dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub shift: DomainShift,
    pub canvas: (usize, usize),
    pub count: usize,
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

pub fn save_dataset(dir: impl AsRef<Path>, manifest: &Manifest, samples: &[Sample]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, s) in samples.iter().enumerate() {
        save_pgm(&s.image, dir.join(format!("{i:05}.img.pgm")))?;
        save_pgm(&s.silhouette, dir.join(format!("{i:05}.sil.pgm")))?;
        write_json(&dir.join(format!("{i:05}.params.json")), &s.gt_params)?;
    }
    write_json(&dir.join("manifest.json"), manifest)
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    read_json(&dir.as_ref().join("manifest.json"))
}

/// Loads a dataset written by [`save_dataset`], including labels.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Manifest, Vec<Sample>)> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    let samples = (0..manifest.count)
        .into_par_iter()
        .map(|i| {
            let image = load_pgm(dir.join(format!("{i:05}.img.pgm")))?;
            let silhouette = BinaryMask::load(dir.join(format!("{i:05}.sil.pgm")))?;
            let gt_params: BodyParams = read_json(&dir.join(format!("{i:05}.params.json")))?;
            if image.dims() != silhouette.dims() {
                return Err(Error::DimensionMismatch {
                    left: image.dims(),
                    right: silhouette.dims(),
                });
            }
            let gt_joints = forward_kinematics(&gt_params, silhouette.dims());
            Ok(Sample {
                image,
                silhouette,
                gt_params,
                gt_joints,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, samples))
}

/// Loads only images and silhouettes; parameter files are never opened.
pub fn load_unlabeled(dir: impl AsRef<Path>) -> Result<Vec<UnlabeledSample>> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    (0..manifest.count)
        .into_par_iter()
        .map(|i| {
            let image = load_pgm(dir.join(format!("{i:05}.img.pgm")))?;
            let silhouette = BinaryMask::load(dir.join(format!("{i:05}.sil.pgm")))?;
            Ok(UnlabeledSample {
                input: RegressorInput::from_image(&image),
                target: FitTarget::new(silhouette)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Joint;

    const CANVAS: (usize, usize) = (64, 64);

    fn canonical_pose() -> Pose2D {
        forward_kinematics(&BodyParams::canonical(), (128, 128))
    }

    #[test]
    fn shift_fixed_points() {
        let img = GrayMap::from_vec(8, 8, (0..64).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap();
        assert_eq!(apply_shift(&img, &DomainShift::Clean).unwrap(), img);
        let zero = DomainShift::Uap {
            epsilon: 0.0,
            seed: 3,
        };
        assert_eq!(apply_shift(&img, &zero).unwrap(), img);
        let blocked =
            GrayMap::from_vec(8, 8, (0..64).map(|i| ((i / 16) * 4 + (i % 8) / 2) as f64 / 16.0).collect())
                .unwrap();
        assert_eq!(
            apply_shift(&blocked, &DomainShift::Lowres { factor: 2 }).unwrap(),
            blocked
        );
        for factor in [0, 1, 8, 9] {
            assert!(matches!(
                apply_shift(&img, &DomainShift::Lowres { factor }),
                Err(Error::InvalidFactor { .. })
            ));
        }
    }

    #[test]
    fn lowres_averages_partial_blocks() {
        let img = GrayMap::from_vec(5, 3, (0..15).map(|i| i as f64 / 15.0).collect()).unwrap();
        let out = apply_shift(&img, &DomainShift::Lowres { factor: 2 }).unwrap();
        let mean = |xs: &[usize]| xs.iter().map(|&i| i as f64 / 15.0).sum::<f64>() / xs.len() as f64;
        assert!((out.get(0, 0) - mean(&[0, 1, 5, 6])).abs() < 1e-12);
        assert!((out.get(4, 1) - mean(&[4, 9])).abs() < 1e-12);
        assert!((out.get(4, 2) - mean(&[14])).abs() < 1e-12);
        assert_eq!(out.get(2, 2), out.get(3, 2));
    }

    #[test]
    fn uap_pattern_is_bounded_blocked_and_shared() {
        let eps = 16.0 / 255.0;
        let (w, h) = (4 * UAP_BLOCK + 3, 2 * UAP_BLOCK + 1);
        let p = uap_pattern(eps, 5, (w, h));
        assert!(p.iter().all(|v| v.abs() == eps));
        let b = UAP_BLOCK;
        for (x, y) in [(b - 1, b - 1), (0, b - 1), (b - 1, 0)] {
            assert_eq!(p[0], p[y * w + x]);
        }
        assert_eq!(p[(2 * b) * w + 4 * b], p[h * w - 1]);
        assert_eq!(p, uap_pattern(eps, 5, (w, h)));
        assert_ne!(p, uap_pattern(eps, 6, (w, h)));
    }

    #[test]
    fn dataset_is_deterministic_and_consistent() {
        let shift = DomainShift::Uap {
            epsilon: 8.0 / 255.0,
            seed: 1,
        };
        let a = gen_dataset(6, 42, &shift, CANVAS).unwrap();
        assert_eq!(a, gen_dataset(6, 42, &shift, CANVAS).unwrap());
        assert_ne!(a, gen_dataset(6, 43, &shift, CANVAS).unwrap());
        assert!(a.iter().all(Sample::check_invariants));
        assert!(matches!(gen_dataset(0, 1, &shift, CANVAS), Err(Error::EmptyDataset)));
    }

    #[test]
    fn mpjpe_examples() {
        let gt = canonical_pose();
        assert_eq!(mpjpe(&gt, &gt), 0.0);
        let moved = Pose2D {
            joints: gt.joints.map(|p| [p[0] + 3.0, p[1] + 4.0]),
        };
        assert!((mpjpe(&moved, &gt) - 5.0).abs() < 1e-12);
        let mut one = gt;
        one.joints[Joint::HeadTop.index()][1] += 11.0;
        assert!((mpjpe(&one, &gt) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn procrustes_removes_similarity() {
        let gt = canonical_pose();
        let t = Similarity {
            scale: 1.7,
            rotation: 30f64.to_radians(),
            translation: [4.0, -9.0],
        };
        let pred = t.apply_pose(&gt);
        assert!(pa_mpjpe(&pred, &gt).unwrap() < 1e-9);
        let id = procrustes_align(&gt, &gt).unwrap();
        assert!((id.scale - 1.0).abs() < 1e-12);
        assert!(id.rotation.abs() < 1e-12);
        assert!(id.translation.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn procrustes_excludes_reflection() {
        let gt = canonical_pose();
        let c = centroid(&gt.joints);
        let reflected = Pose2D {
            joints: gt.joints.map(|p| [2.0 * c[0] - p[0] + 0.3 * (p[1] - c[1]), p[1]]),
        };
        assert!(pa_mpjpe(&reflected, &gt).unwrap() > 1.0);
        let degenerate = Pose2D {
            joints: [[5.0, 5.0]; NUM_JOINTS],
        };
        assert!(matches!(pa_mpjpe(&degenerate, &gt), Err(Error::DegeneratePose)));
    }

    #[test]
    fn dataset_disk_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let shift = DomainShift::Lowres { factor: 4 };
        let samples = gen_dataset(3, 9, &shift, CANVAS).unwrap();
        let manifest = Manifest {
            seed: 9,
            shift,
            canvas: CANVAS,
            count: 3,
        };
        save_dataset(dir.path(), &manifest, &samples).unwrap();
        let (m, back) = load_dataset(dir.path()).unwrap();
        assert_eq!(m, manifest);
        assert_eq!(back, samples);
        assert_eq!(load_unlabeled(dir.path()).unwrap().len(), 3);
    }

    #[test]
    fn zero_iteration_ablation_repeats_pre_row() {
        let samples = gen_dataset(4, 1, &DomainShift::Clean, CANVAS).unwrap();
        let target: Vec<_> = samples.iter().map(|s| s.unlabeled().unwrap()).collect();
        let w = RegressorWeights::init(&mut seeded(2));
        let cfg = AblationConfig {
            adapt: AdaptConfig {
                max_iter: 0,
                ..AdaptConfig::default()
            },
            ..AblationConfig::default()
        };
        let report = run_ablation(&w, &target, &samples, &cfg).unwrap();
        assert_eq!(report.rows.len(), 8);
        let pre = report.row("B1", "pre").unwrap();
        for row in &report.rows {
            assert_eq!((row.mpjpe, row.pa_mpjpe, row.n), (pre.mpjpe, pre.pa_mpjpe, pre.n));
        }
    }
}
