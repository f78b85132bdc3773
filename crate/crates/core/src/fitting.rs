//! Iterative fitting of body parameters to a target silhouette.
//!
//! The objective is a weighted sum of a skeleton term, a silhouette term and
//! a shape prior. The data terms are piecewise constant in the parameters,
//! so gradients come from central differences with steps large enough to
//! move a silhouette boundary by about a pixel, and every step is accepted
//! only if it strictly lowers the objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{rasterize, BodyParams, ParamGroup, MEAN_SHAPE, NUM_PARAMS};
use crate::error::{Error, Result};
use crate::losses::{pixel_l2, ChamferTarget, LossValue};
use crate::mask::BinaryMask;
use crate::topology::{skeletonize, Skeleton};

/// Which silhouette-level objective drives fitting and adaptation.
///
/// The variants line up with the ablation rows: pixel L2 on silhouettes,
/// spatial Chamfer on silhouettes, spatial Chamfer plus pixel L2 on
/// skeletons, and spatial Chamfer on both silhouettes and skeletons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    PixelL2,
    Chamfer,
    ChamferSkeletonL2,
    #[default]
    ChamferTopology,
}

impl Objective {
    pub const ALL: [Objective; 4] = [
        Objective::PixelL2,
        Objective::Chamfer,
        Objective::ChamferSkeletonL2,
        Objective::ChamferTopology,
    ];

    /// Row label in ablation reports.
    pub fn label(self) -> &'static str {
        match self {
            Objective::PixelL2 => "B1",
            Objective::Chamfer => "B2",
            Objective::ChamferSkeletonL2 => "B3",
            Objective::ChamferTopology => "Ours",
        }
    }

    /// Accepts either the snake_case name or the ablation label.
    pub fn parse(s: &str) -> Option<Objective> {
        Objective::ALL.into_iter().find(|o| {
            o.label().eq_ignore_ascii_case(s)
                || serde_json::to_value(o).ok().and_then(|v| v.as_str().map(|n| n == s)) == Some(true)
        })
    }

    fn uses_skeleton(self) -> bool {
        matches!(self, Objective::ChamferSkeletonL2 | Objective::ChamferTopology)
    }
}

/// Maximum total for a prediction whose silhouette is empty: every pixel at
/// the largest possible distance.
pub fn penalty_empty(canvas: (usize, usize)) -> f64 {
    let (w, h) = canvas;
    (w * h * w.max(h)) as f64
}

/// Silhouette and skeleton of a target, with their outwards maps cached.
#[derive(Debug, Clone)]
pub struct FitTarget {
    silhouette: ChamferTarget,
    skeleton: ChamferTarget,
}

impl FitTarget {
    pub fn new(silhouette: BinaryMask) -> Result<Self> {
        if silhouette.is_empty() {
            return Err(Error::EmptyMask("fitting target silhouette"));
        }
        let skeleton = skeletonize(&silhouette).into_mask();
        Ok(Self {
            silhouette: ChamferTarget::new(silhouette)?,
            skeleton: ChamferTarget::new(skeleton)?,
        })
    }

    pub fn silhouette(&self) -> &BinaryMask {
        self.silhouette.mask()
    }

    pub fn skeleton(&self) -> &BinaryMask {
        self.skeleton.mask()
    }

    pub fn canvas(&self) -> (usize, usize) {
        self.silhouette.mask().dims()
    }

    /// `(L_T, L_S)` of a predicted silhouette and (optionally) its skeleton.
    ///
    /// `pred_skeleton` is only consulted by objectives with a skeleton term.
    pub fn data_terms(
        &self,
        objective: Objective,
        pred: &BinaryMask,
        pred_skeleton: Option<&Skeleton>,
    ) -> Result<(LossValue, LossValue)> {
        let l_s = match objective {
            Objective::PixelL2 => pixel_l2(self.silhouette(), pred)?,
            _ => self.silhouette.loss(pred)?,
        };
        let l_t = match objective {
            Objective::PixelL2 | Objective::Chamfer => LossValue::default(),
            Objective::ChamferSkeletonL2 | Objective::ChamferTopology => {
                let owned;
                let skel = match pred_skeleton {
                    Some(s) => s,
                    None => {
                        owned = skeletonize(pred);
                        &owned
                    }
                };
                if objective == Objective::ChamferSkeletonL2 {
                    pixel_l2(self.skeleton(), skel.mask())?
                } else {
                    self.skeleton.loss(skel.mask())?
                }
            }
        };
        Ok((l_t, l_s))
    }

    /// Weighted data terms `(w_T * L_T, w_S * L_S)` of `params`, or the empty
    /// penalty on both when the figure leaves the canvas.
    pub fn weighted_terms(
        &self,
        params: &BodyParams,
        objective: Objective,
        weights: &FitWeights,
        normalized: bool,
    ) -> [f64; 2] {
        let pred = rasterize(params, self.canvas());
        if pred.is_empty() {
            let p = penalty_empty(self.canvas());
            return [p, p];
        }
        let skel = objective.uses_skeleton().then(|| skeletonize(&pred));
        let (l_t, l_s) = self
            .data_terms(objective, &pred, skel.as_ref())
            .expect("both operands are non-empty and share dimensions");
        [
            weights.w_t * l_t.get(normalized),
            weights.w_s * l_s.get(normalized),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWeights {
    pub w_t: f64,
    pub w_s: f64,
    pub w_beta: f64,
}

impl Default for FitWeights {
    fn default() -> Self {
        Self {
            w_t: 1.0,
            w_s: 1.0,
            w_beta: 0.1,
        }
    }
}

/// Central-difference step per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSteps {
    pub phi: f64,
    pub beta: f64,
    pub alpha: f64,
    pub scale: f64,
    pub translation: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            phi: 0.05,
            beta: 0.02,
            alpha: 0.05,
            scale: 0.02,
            translation: 1.0,
        }
    }
}

impl FdSteps {
    pub fn for_index(&self, index: usize) -> f64 {
        match ParamGroup::of(index) {
            ParamGroup::Phi => self.phi,
            ParamGroup::Beta => self.beta,
            ParamGroup::Alpha => self.alpha,
            ParamGroup::Scale => self.scale,
            ParamGroup::Translation => self.translation,
        }
    }

    pub fn as_vector(&self) -> [f64; NUM_PARAMS] {
        std::array::from_fn(|i| self.for_index(i))
    }

    fn validate(&self) -> Result<()> {
        if self.as_vector().iter().all(|&s| s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("finite-difference steps must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub max_iters: usize,
    pub weights: FitWeights,
    pub fd_steps: FdSteps,
    /// Step length of the first trial, before halving.
    pub initial_rate: f64,
    pub max_halvings: usize,
    /// How many finite-difference steps the largest coordinate moves at rate 1.
    pub step_units: f64,
    pub use_normalized_losses: bool,
    pub objective: Objective,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            weights: FitWeights::default(),
            fd_steps: FdSteps::default(),
            initial_rate: 1.0,
            max_halvings: 8,
            step_units: 2.0,
            use_normalized_losses: true,
            objective: Objective::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.fd_steps.validate()?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.initial_rate > 0.0 && self.step_units > 0.0) {
            return Err(Error::InvalidConfig("step rate and units must be positive".into()));
        }
        Ok(())
    }
}

/// Total objective and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub l_t: f64,
    pub l_s: f64,
    pub reg: f64,
}

fn shape_prior(params: &BodyParams) -> f64 {
    params
        .beta()
        .iter()
        .zip(MEAN_SHAPE)
        .map(|(b, m)| (b - m) * (b - m))
        .sum()
}

/// `w_T * L_T + w_S * L_S + w_beta * |beta - mean|^2` against a prepared
/// target. The reported `l_t` and `l_s` are unweighted.
pub fn fit_loss(
    params: &BodyParams,
    target: &FitTarget,
    objective: Objective,
    weights: &FitWeights,
    normalized: bool,
) -> LossBreakdown {
    let reg = shape_prior(params);
    let pred = rasterize(params, target.canvas());
    if pred.is_empty() {
        let p = penalty_empty(target.canvas());
        return LossBreakdown {
            total: p + weights.w_beta * reg,
            l_t: p,
            l_s: p,
            reg,
        };
    }
    let skel = objective.uses_skeleton().then(|| skeletonize(&pred));
    let (l_t, l_s) = target
        .data_terms(objective, &pred, skel.as_ref())
        .expect("both operands are non-empty and share dimensions");
    let (l_t, l_s) = (l_t.get(normalized), l_s.get(normalized));
    LossBreakdown {
        total: weights.w_t * l_t + weights.w_s * l_s + weights.w_beta * reg,
        l_t,
        l_s,
        reg,
    }
}

/// [`fit_loss`] with the target built from a raw silhouette, under the
/// default skeleton-and-silhouette Chamfer objective.
pub fn total_fit_loss(
    params: &BodyParams,
    target_s: &BinaryMask,
    weights: &FitWeights,
    normalized: bool,
) -> Result<LossBreakdown> {
    let target = FitTarget::new(target_s.clone())?;
    Ok(fit_loss(params, &target, Objective::ChamferTopology, weights, normalized))
}

/// Central differences of a vector-valued loss, one gradient per output.
///
/// Coordinates with a box are probed at clamped displacements and divided by
/// the displacement actually taken. Probes run in parallel; the result does
/// not depend on the number of workers.
pub fn fd_gradients<const K: usize, F>(
    loss_at: F,
    params: &BodyParams,
    steps: &[f64; NUM_PARAMS],
) -> [[f64; NUM_PARAMS]; K]
where
    F: Fn(&BodyParams) -> [f64; K] + Sync,
{
    let base = params.to_vector();
    let columns: Vec<[f64; K]> = (0..NUM_PARAMS)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = ParamGroup::of(i).bounds();
            let plus = (base[i] + steps[i]).min(hi);
            let minus = (base[i] - steps[i]).max(lo);
            let span = plus - minus;
            if span <= 0.0 {
                return [0.0; K];
            }
            let mut v = base;
            v[i] = plus;
            let f_plus = loss_at(&BodyParams::from_vector(&v));
            v[i] = minus;
            let f_minus = loss_at(&BodyParams::from_vector(&v));
            std::array::from_fn(|k| (f_plus[k] - f_minus[k]) / span)
        })
        .collect();
    let mut grads = [[0.0; NUM_PARAMS]; K];
    for (i, col) in columns.iter().enumerate() {
        for k in 0..K {
            grads[k][i] = col[k];
        }
    }
    grads
}

/// Central-difference gradient of a scalar loss over the 17 flat parameters.
pub fn fd_gradient<F>(loss_at: F, params: &BodyParams, steps: &[f64; NUM_PARAMS]) -> [f64; NUM_PARAMS]
where
    F: Fn(&BodyParams) -> f64 + Sync,
{
    let [g] = fd_gradients(|p| [loss_at(p)], params, steps);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub total: f64,
    pub l_t: f64,
    pub l_s: f64,
    pub reg: f64,
}

impl TraceRow {
    fn new(iter: usize, b: LossBreakdown) -> Self {
        Self {
            iter,
            total: b.total,
            l_t: b.l_t,
            l_s: b.l_s,
            reg: b.reg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BodyParams,
    /// Row 0 is the initial state; row `k` follows iteration `k`.
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.total)
    }
}

const CONVERGENCE_WINDOW: usize = 3;
const CONVERGENCE_TOL: f64 = 1e-4;

/// Fits `init` to `target_s`; see [`fit_target`].
pub fn fit(target_s: &BinaryMask, init: &BodyParams, cfg: &FitConfig) -> Result<FitResult> {
    let target = FitTarget::new(target_s.clone())?;
    fit_target(&target, init, cfg)
}

/// Preconditioned gradient descent with backtracking.
///
/// Each iteration scales the gradient by the squared FD steps (so the search
/// direction is expressed in "steps" per coordinate), normalises it so that
/// its largest coordinate moves `step_units` FD steps at rate 1, and halves
/// the rate until the objective strictly decreases. An iteration with no
/// accepted step ends the run.
pub fn fit_target(target: &FitTarget, init: &BodyParams, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let steps = cfg.fd_steps.as_vector();
    let eval = |p: &BodyParams| {
        fit_loss(p, target, cfg.objective, &cfg.weights, cfg.use_normalized_losses)
    };

    let mut params = *init;
    let mut current = eval(&params);
    let mut trace = vec![TraceRow::new(0, current)];
    let mut converged = current.total == 0.0;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        let grad = fd_gradient(|p| eval(p).total, &params, &steps);
        let scaled: [f64; NUM_PARAMS] = std::array::from_fn(|i| grad[i] * steps[i]);
        let norm = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 || !norm.is_finite() {
            converged = true;
            break;
        }
        let base = params.to_vector();
        let direction: [f64; NUM_PARAMS] =
            std::array::from_fn(|i| -cfg.step_units * steps[i] * scaled[i] / norm);

        let mut rate = cfg.initial_rate;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let v: [f64; NUM_PARAMS] = std::array::from_fn(|i| base[i] + rate * direction[i]);
            let candidate = BodyParams::from_vector(&v);
            let loss = eval(&candidate);
            if loss.total < current.total {
                accepted = Some((candidate, loss));
                break;
            }
            rate *= 0.5;
        }
        let Some((next, loss)) = accepted else {
            converged = true;
            break;
        };
        params = next;
        current = loss;
        iterations += 1;
        trace.push(TraceRow::new(iterations, current));

        if current.total == 0.0 {
            converged = true;
        } else if trace.len() > CONVERGENCE_WINDOW {
            let before = trace[trace.len() - 1 - CONVERGENCE_WINDOW].total;
            if (before - current.total) / before.abs() < CONVERGENCE_TOL {
                converged = true;
            }
        }
    }

    Ok(FitResult {
        params,
        trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Camera;

    const CANVAS: (usize, usize) = (128, 128);

    fn posed() -> BodyParams {
        BodyParams::new(
            [0.2, -0.1, 0.4, -0.3, 0.1, 0.5, -0.2, 0.3, 0.2, -0.4],
            [1.0, 1.0, 1.0],
            Camera {
                alpha: 0.1,
                s: 1.0,
                t: [2.0, -3.0],
            },
        )
    }

    #[test]
    fn quadratic_gradient_is_exact() {
        let c: [f64; NUM_PARAMS] = std::array::from_fn(|i| 0.1 * i as f64 - 0.5);
        let loss = |p: &BodyParams| {
            p.to_vector()
                .iter()
                .zip(&c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let params = posed();
        let g = fd_gradient(loss, &params, &FdSteps::default().as_vector());
        let v = params.to_vector();
        for i in 0..NUM_PARAMS {
            let analytic = 2.0 * (v[i] - c[i]);
            assert!((g[i] - analytic).abs() < 1e-9, "{i}: {} vs {analytic}", g[i]);
        }
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = fd_gradient(|_| 3.5, &posed(), &FdSteps::default().as_vector());
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_at_phi_boundary_is_one_sided() {
        let mut v = posed().to_vector();
        v[0] = 1.0;
        let params = BodyParams::from_vector(&v);
        // loss linear in phi_0 with slope 3
        let g = fd_gradient(|p| 3.0 * p.phi()[0], &params, &FdSteps::default().as_vector());
        assert!((g[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_consistent_params_have_zero_data_terms() {
        let gt = posed();
        let target = rasterize(&gt, CANVAS);
        let b = total_fit_loss(&gt, &target, &FitWeights::default(), true).unwrap();
        assert_eq!(b.l_t, 0.0);
        assert_eq!(b.l_s, 0.0);
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn translated_params_have_positive_terms() {
        let gt = posed();
        let target = rasterize(&gt, CANVAS);
        let mut v = gt.to_vector();
        v[15] += 3.0;
        let b = total_fit_loss(&BodyParams::from_vector(&v), &target, &FitWeights::default(), false)
            .unwrap();
        assert!(b.l_s > 0.0 && b.l_t > 0.0);
    }

    #[test]
    fn off_canvas_params_hit_the_penalty() {
        let target = rasterize(&posed(), CANVAS);
        let mut v = posed().to_vector();
        v[15] = 1000.0;
        let b = total_fit_loss(&BodyParams::from_vector(&v), &target, &FitWeights::default(), true)
            .unwrap();
        assert!(b.total >= penalty_empty(CANVAS));
    }

    #[test]
    fn empty_target_is_an_error() {
        let empty = BinaryMask::zeros(16, 16).unwrap();
        assert!(matches!(
            fit(&empty, &BodyParams::canonical(), &FitConfig::default()),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn fit_at_truth_stops_immediately() {
        let gt = posed();
        let target = rasterize(&gt, CANVAS);
        let r = fit(&target, &gt, &FitConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 1);
        assert!(r.final_loss() <= r.trace[0].total);
    }

    #[test]
    fn fit_reduces_loss_monotonically() {
        let gt = posed();
        let target = rasterize(&gt, CANVAS);
        let mut v = gt.to_vector();
        v[15] += 4.0;
        v[2] += 0.15;
        let cfg = FitConfig {
            max_iters: 15,
            ..FitConfig::default()
        };
        let r = fit(&target, &BodyParams::from_vector(&v), &cfg).unwrap();
        assert!(r.final_loss() < r.trace[0].total);
        for w in r.trace.windows(2) {
            assert!(w[1].total <= w[0].total);
        }
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = FitConfig::default();
        cfg.fd_steps.phi = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = FitConfig {
            max_iters: 0,
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
