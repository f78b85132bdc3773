//! Source training and silhouette-only target adaptation of the regressor.
//!
//! Adaptation alternates two branches on a period `k`. On iterations with
//! `iter % k != 0` the regressor is updated directly on the silhouette and
//! skeleton losses (output-space central differences chained through the
//! network). On the remaining iterations every batch item is fitted, starting
//! from the regressor's own prediction, and the fitted parameters then
//! supervise the regressor through the parameter loss.
//!
//! The adaptation entry point only ever sees [`UnlabeledSample`]s, which
//! carry an image and a silhouette and nothing else.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{forward_kinematics, BodyParams, NUM_PARAMS};
use crate::error::{Error, Result};
use crate::fitting::{fd_gradients, fit_target, FdSteps, FitConfig, FitTarget, FitWeights, Objective};
use crate::losses::keypoint_l2;
use crate::regressor::{
    backward_into, forward_cached, param_loss, param_loss_grad, Adam, RegressorInput,
    RegressorWeights,
};
use crate::rng::{derive_seed, seeded};

/// Items per gradient chunk. Chunks are accumulated serially and summed in
/// order, so the reduction tree never depends on the worker count.
const CHUNK: usize = 4;

/// A source-domain item: regressor input plus its ground-truth parameters.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub input: RegressorInput,
    pub params: BodyParams,
    pub canvas: (usize, usize),
}

/// A target-domain item. There is deliberately no label here.
#[derive(Debug, Clone)]
pub struct UnlabeledSample {
    pub input: RegressorInput,
    pub target: FitTarget,
}

/// Sums per-item gradients over a batch in a fixed order.
fn reduce_batch<T, F>(items: &[T], per_item: F) -> (RegressorWeights, Vec<f64>)
where
    T: Sync,
    F: Fn(&T, &mut RegressorWeights) -> f64 + Sync,
{
    let partials: Vec<(RegressorWeights, Vec<f64>)> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = RegressorWeights::zeros();
            let losses = chunk.iter().map(|item| per_item(item, &mut g)).collect();
            (g, losses)
        })
        .collect();
    let mut grad = RegressorWeights::zeros();
    let mut losses = Vec::with_capacity(items.len());
    for (g, l) in &partials {
        grad.axpy(1.0, g);
        losses.extend_from_slice(l);
    }
    (grad, losses)
}

/// Batch-mean gradient of the scaled squared parameter loss towards each
/// item's target parameters. Returns the gradient and the mean loss.
pub fn supervised_grad(
    w: &RegressorWeights,
    batch: &[(RegressorInput, BodyParams)],
) -> Result<(RegressorWeights, f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (grad, losses) = reduce_batch(batch, |(input, target), g| {
        let (pred, cache) = forward_cached(w, input);
        backward_into(w, input, &cache, &param_loss_grad(&pred, target), g);
        param_loss(&pred, target)
    });
    let n = batch.len() as f64;
    Ok((grad.scaled(1.0 / n), losses.iter().sum::<f64>() / n))
}

/// Silhouette-branch settings shared by [`silhouette_grad`] and [`adapt`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SilhouetteLossConfig {
    pub objective: Objective,
    pub weights: FitWeights,
    pub fd_steps: FdSteps,
    pub use_normalized_losses: bool,
}

impl Default for SilhouetteLossConfig {
    fn default() -> Self {
        Self {
            objective: Objective::default(),
            weights: FitWeights::default(),
            fd_steps: FdSteps::default(),
            use_normalized_losses: true,
        }
    }
}

/// Weight gradients of the two silhouette terms, kept apart so each can
/// have its own optimiser.
#[derive(Debug, Clone)]
pub struct SilhouetteGrad {
    /// Gradient of `w_T * L_T`.
    pub topology: RegressorWeights,
    /// Gradient of `w_S * L_S`.
    pub silhouette: RegressorWeights,
    /// Batch means of the weighted terms at the current prediction.
    pub l_t: f64,
    pub l_s: f64,
}

/// Output-space central differences of `[w_T L_T, w_S L_S]`, pulled back
/// through the network and averaged over the batch.
pub fn silhouette_grad(
    w: &RegressorWeights,
    batch: &[&UnlabeledSample],
    cfg: &SilhouetteLossConfig,
) -> Result<SilhouetteGrad> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let steps = cfg.fd_steps.as_vector();
    let per_item: Vec<(RegressorWeights, RegressorWeights, [f64; 2])> = batch
        .par_iter()
        .map(|item| {
            let (pred, cache) = forward_cached(w, &item.input);
            let terms = |p: &BodyParams| {
                item.target
                    .weighted_terms(p, cfg.objective, &cfg.weights, cfg.use_normalized_losses)
            };
            let [d_t, d_s] = fd_gradients(terms, &pred, &steps);
            let mut g_t = RegressorWeights::zeros();
            let mut g_s = RegressorWeights::zeros();
            if d_t.iter().any(|&v| v != 0.0) {
                backward_into(w, &item.input, &cache, &d_t, &mut g_t);
            }
            if d_s.iter().any(|&v| v != 0.0) {
                backward_into(w, &item.input, &cache, &d_s, &mut g_s);
            }
            (g_t, g_s, terms(&pred))
        })
        .collect();
    let n = batch.len() as f64;
    let mut out = SilhouetteGrad {
        topology: RegressorWeights::zeros(),
        silhouette: RegressorWeights::zeros(),
        l_t: 0.0,
        l_s: 0.0,
    };
    for (g_t, g_s, [l_t, l_s]) in &per_item {
        out.topology.axpy(1.0 / n, g_t);
        out.silhouette.axpy(1.0 / n, g_s);
        out.l_t += l_t / n;
        out.l_s += l_s / n;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Either Adam or plain gradient descent at a fixed rate.
#[derive(Debug, Clone)]
enum Optimizer {
    Adam(Adam),
    Sgd(f64),
}

impl Optimizer {
    fn new(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr)),
            OptimizerKind::Sgd => Optimizer::Sgd(lr),
        }
    }

    fn step(&mut self, w: &mut RegressorWeights, grad: &RegressorWeights) {
        match self {
            Optimizer::Adam(adam) => adam.step(w, grad),
            Optimizer::Sgd(lr) => {
                if *lr != 0.0 {
                    w.axpy(-*lr, grad);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Supervised,
    Direct,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iter: usize,
    pub branch: Branch,
    pub l_t: f64,
    pub l_s: f64,
    pub l_theta: f64,
    /// Filled in at the evaluation cadence when a monitor is attached.
    pub eval_mpjpe: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Weight of an extra 2D keypoint term; zero disables it.
    pub keypoint_weight: f64,
    /// Anneal the rate along a half cosine to zero over the epochs.
    pub cosine_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 1e-3,
            batch_size: 16,
            seed: 0,
            keypoint_weight: 0.0,
            cosine_decay: true,
        }
    }
}

const KEYPOINT_FD_STEP: f64 = 1e-4;

/// Gradient in parameter space of the mean squared keypoint error.
fn keypoint_grad(pred: &BodyParams, truth: &BodyParams, canvas: (usize, usize)) -> [f64; NUM_PARAMS] {
    let gt = forward_kinematics(truth, canvas).joints;
    let loss = |p: &BodyParams| {
        let joints = forward_kinematics(p, canvas).joints;
        keypoint_l2(&joints, &gt).map(|l| l.normalized).unwrap_or(0.0)
    };
    let base = pred.to_vector();
    std::array::from_fn(|i| {
        let mut v = base;
        v[i] += KEYPOINT_FD_STEP;
        let up = loss(&BodyParams::from_vector(&v));
        v[i] = base[i] - KEYPOINT_FD_STEP;
        let down = loss(&BodyParams::from_vector(&v));
        (up - down) / (2.0 * KEYPOINT_FD_STEP)
    })
}

/// Mini-batch Adam on the parameter loss, reshuffling every epoch.
pub fn train_source(
    dataset: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<(RegressorWeights, TrainLog)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 || !(cfg.lr >= 0.0) {
        return Err(Error::InvalidConfig("batch_size must be positive and lr non-negative".into()));
    }
    let mut rng = seeded(derive_seed(cfg.seed, 0));
    let mut w = RegressorWeights::init(&mut rng);
    let mut adam = Adam::new(cfg.lr);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..cfg.epochs {
        if cfg.cosine_decay {
            let progress = epoch as f64 / cfg.epochs as f64;
            adam.lr = cfg.lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        }
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let items: Vec<&LabeledSample> = batch.iter().map(|&i| &dataset[i]).collect();
            let (grad, losses) = reduce_batch(&items, |item, g| {
                let (pred, cache) = forward_cached(&w, &item.input);
                let mut d = param_loss_grad(&pred, &item.params);
                if cfg.keypoint_weight > 0.0 {
                    let k = keypoint_grad(&pred, &item.params, item.canvas);
                    for (a, b) in d.iter_mut().zip(k) {
                        *a += cfg.keypoint_weight * b;
                    }
                }
                backward_into(&w, &item.input, &cache, &d, g);
                param_loss(&pred, &item.params)
            });
            adam.step(&mut w, &grad.scaled(1.0 / items.len() as f64));
            epoch_loss += losses.iter().sum::<f64>();
        }
        log.records.push(LogRecord {
            iter: epoch,
            branch: Branch::Supervised,
            l_t: 0.0,
            l_s: 0.0,
            l_theta: epoch_loss / dataset.len() as f64,
            eval_mpjpe: None,
        });
    }
    Ok((w, log))
}

/// Adaptation schedule and optimiser settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    /// Period of the fitting branch: it runs when `iter % k == 0`.
    pub k: usize,
    pub max_iter: usize,
    /// Fitting iterations per item on the fitting branch.
    pub max_iter_opt: usize,
    pub lr_t: f64,
    pub lr_s: f64,
    pub lr_theta: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub loss: SilhouetteLossConfig,
    /// Rate/halving/step-size settings of the inner fit; its `max_iters`,
    /// `objective`, weights and FD steps are overridden from this config.
    pub fit: FitConfig,
    /// Evaluate the monitor every this many iterations (0 disables).
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_iter: 100,
            max_iter_opt: 10,
            lr_t: 1e-4,
            lr_s: 1e-4,
            lr_theta: 1e-4,
            batch_size: 16,
            optimizer: OptimizerKind::Adam,
            loss: SilhouetteLossConfig::default(),
            fit: FitConfig::default(),
            eval_every: 0,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig("k must be at least 2".into()));
        }
        if self.batch_size == 0 || self.max_iter_opt == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and max_iter_opt must be positive".into(),
            ));
        }
        for lr in [self.lr_t, self.lr_s, self.lr_theta] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::InvalidConfig(format!("invalid learning rate {lr}")));
            }
        }
        self.inner_fit_config().validate()
    }

    /// The per-item fitting config used on the fitting branch.
    pub fn inner_fit_config(&self) -> FitConfig {
        FitConfig {
            max_iters: self.max_iter_opt,
            weights: self.loss.weights,
            fd_steps: self.loss.fd_steps,
            use_normalized_losses: self.loss.use_normalized_losses,
            objective: self.loss.objective,
            ..self.fit
        }
    }

    /// True when iteration `iter` takes the fitting branch.
    pub fn is_fit_iteration(&self, iter: usize) -> bool {
        iter % self.k == 0
    }
}

/// Draws batches by walking reshuffled permutations of the dataset.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    rng: crate::rng::SeededRng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Self { order, pos: 0, rng }
    }

    fn next(&mut self, size: usize) -> Vec<usize> {
        let size = size.min(self.order.len());
        if self.pos + size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let batch = self.order[self.pos..self.pos + size].to_vec();
        self.pos += size;
        batch
    }
}

/// Silhouette-only adaptation; see the module docs for the schedule.
pub fn adapt(
    w: &RegressorWeights,
    dataset: &[UnlabeledSample],
    cfg: &AdaptConfig,
) -> Result<(RegressorWeights, TrainLog)> {
    adapt_with_monitor(w, dataset, cfg, None)
}

/// [`adapt`] with an optional evaluation callback, invoked before the first
/// iteration and then every `cfg.eval_every` iterations. The callback is the
/// only place ground truth can enter, and it cannot influence the weights.
pub fn adapt_with_monitor(
    w: &RegressorWeights,
    dataset: &[UnlabeledSample],
    cfg: &AdaptConfig,
    monitor: Option<&(dyn Fn(&RegressorWeights) -> f64 + Sync)>,
) -> Result<(RegressorWeights, TrainLog)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut w = w.clone();
    let mut opt_t = Optimizer::new(cfg.optimizer, cfg.lr_t);
    let mut opt_s = Optimizer::new(cfg.optimizer, cfg.lr_s);
    let mut opt_theta = Optimizer::new(cfg.optimizer, cfg.lr_theta);
    let mut sampler = BatchSampler::new(dataset.len(), derive_seed(cfg.seed, 1));
    let fit_cfg = cfg.inner_fit_config();
    let mut log = TrainLog::default();

    for iter in 0..cfg.max_iter {
        let eval_mpjpe = match monitor {
            Some(m) if cfg.eval_every > 0 && iter % cfg.eval_every == 0 => Some(m(&w)),
            _ => None,
        };
        let batch: Vec<&UnlabeledSample> = sampler
            .next(cfg.batch_size)
            .into_iter()
            .map(|i| &dataset[i])
            .collect();

        let record = if !cfg.is_fit_iteration(iter) {
            let g = silhouette_grad(&w, &batch, &cfg.loss)?;
            opt_t.step(&mut w, &g.topology);
            opt_s.step(&mut w, &g.silhouette);
            LogRecord {
                iter,
                branch: Branch::Direct,
                l_t: g.l_t,
                l_s: g.l_s,
                l_theta: 0.0,
                eval_mpjpe,
            }
        } else {
            let fitted: Vec<(BodyParams, f64, f64)> = batch
                .par_iter()
                .map(|item| {
                    let (init, _) = forward_cached(&w, &item.input);
                    let r = fit_target(&item.target, &init, &fit_cfg)?;
                    let last = r.trace.last().copied().expect("trace has the initial row");
                    Ok((r.params, last.l_t, last.l_s))
                })
                .collect::<Result<_>>()?;
            let pairs: Vec<(RegressorInput, BodyParams)> = batch
                .iter()
                .zip(&fitted)
                .map(|(item, (p, _, _))| (item.input.clone(), *p))
                .collect();
            let (g, l_theta) = supervised_grad(&w, &pairs)?;
            opt_theta.step(&mut w, &g);
            let n = fitted.len() as f64;
            LogRecord {
                iter,
                branch: Branch::Fit,
                l_t: fitted.iter().map(|f| f.1).sum::<f64>() / n,
                l_s: fitted.iter().map(|f| f.2).sum::<f64>() / n,
                l_theta,
                eval_mpjpe,
            }
        };
        log.records.push(record);
    }
    Ok((w, log))
}
