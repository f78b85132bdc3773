//! A small fully-connected image-to-parameters regressor.
//!
//! 32x32 box-averaged image -> 64 tanh -> 64 tanh -> 17 raw outputs, mapped
//! through fixed heads so every prediction is a valid [`BodyParams`]:
//! `phi = tanh(z)`, `beta = 1 + 0.5 tanh(z)`, `alpha = z`, `s = exp(z)`,
//! `t = z`. Gradients are derived by hand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::{BodyParams, ParamGroup, NUM_PARAMS};
use crate::error::{Error, Result};
use crate::mask::GrayMap;
use crate::rng::SeededRng;

pub const INPUT_SIDE: usize = 32;
pub const INPUT_DIM: usize = INPUT_SIDE * INPUT_SIDE;
pub const HIDDEN: usize = 64;

/// Residual scale per parameter group in the supervised loss; roughly the
/// change in each group that moves joints by the same number of pixels.
pub fn param_scale(index: usize) -> f64 {
    match ParamGroup::of(index) {
        ParamGroup::Phi => 1.0,
        ParamGroup::Beta | ParamGroup::Alpha | ParamGroup::Scale => 0.5,
        ParamGroup::Translation => 10.0,
    }
}

/// Box-averages an image down to `32 x 32` and centres it around zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorInput(Vec<f64>);

impl RegressorInput {
    pub fn from_image(image: &GrayMap) -> Self {
        let (w, h) = image.dims();
        let mut out = vec![0.0; INPUT_DIM];
        for oy in 0..INPUT_SIDE {
            let y0 = oy * h / INPUT_SIDE;
            let y1 = ((oy + 1) * h / INPUT_SIDE).max(y0 + 1).min(h);
            for ox in 0..INPUT_SIDE {
                let x0 = ox * w / INPUT_SIDE;
                let x1 = ((ox + 1) * w / INPUT_SIDE).max(x0 + 1).min(w);
                let mut sum = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        sum += image.get(x.min(w - 1), y.min(h - 1));
                    }
                }
                let n = ((y1 - y0) * (x1 - x0)) as f64;
                out[oy * INPUT_SIDE + ox] = sum / n - 0.5;
            }
        }
        Self(out)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// One affine layer, weights row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Parameters of the 1024-64-64-17 network, in layer order. The same shape
/// doubles as a gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorWeights {
    pub layers: Vec<Dense>,
}

impl RegressorWeights {
    pub fn zeros() -> Self {
        Self {
            layers: vec![
                Dense::zeros(INPUT_DIM, HIDDEN),
                Dense::zeros(HIDDEN, HIDDEN),
                Dense::zeros(HIDDEN, NUM_PARAMS),
            ],
        }
    }

    /// Uniform Glorot initialisation; the output layer is shrunk tenfold so
    /// initial predictions sit near the mean pose.
    pub fn init(rng: &mut SeededRng) -> Self {
        let mut w = Self::zeros();
        let last = w.layers.len() - 1;
        for (k, layer) in w.layers.iter_mut().enumerate() {
            let mut limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            if k == last {
                limit *= 0.1;
            }
            for v in &mut layer.weights {
                *v = rng.gen_range(-limit..limit);
            }
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = [(INPUT_DIM, HIDDEN), (HIDDEN, HIDDEN), (HIDDEN, NUM_PARAMS)];
        if self.layers.len() != shapes.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} layers, found {}",
                shapes.len(),
                self.layers.len()
            )));
        }
        for (layer, (i, o)) in self.layers.iter().zip(shapes) {
            if layer.inputs != i
                || layer.outputs != o
                || layer.weights.len() != i * o
                || layer.bias.len() != o
            {
                return Err(Error::InvalidConfig(format!(
                    "layer shape mismatch, expected {i}x{o}"
                )));
            }
        }
        if !self.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite weight".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every scalar in a fixed order: per layer, weights then bias.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn get_flat(&self, index: usize) -> f64 {
        *self.iter().nth(index).expect("flat index in range")
    }

    pub fn set_flat(&mut self, index: usize, value: f64) {
        *self.iter_mut().nth(index).expect("flat index in range") = value;
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &RegressorWeights) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, scale: f64) -> RegressorWeights {
        let mut out = self.clone();
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sums gradients in the given order.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a RegressorWeights>) -> RegressorWeights {
        let mut acc = RegressorWeights::zeros();
        for g in items {
            acc.axpy(1.0, g);
        }
        acc
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    h1: Vec<f64>,
    h2: Vec<f64>,
    z: [f64; NUM_PARAMS],
}

impl ForwardCache {
    pub fn raw_outputs(&self) -> &[f64; NUM_PARAMS] {
        &self.z
    }
}

fn heads(z: &[f64; NUM_PARAMS]) -> BodyParams {
    let v: [f64; NUM_PARAMS] = std::array::from_fn(|i| match ParamGroup::of(i) {
        ParamGroup::Phi => z[i].tanh(),
        ParamGroup::Beta => 1.0 + 0.5 * z[i].tanh(),
        ParamGroup::Scale => z[i].exp(),
        ParamGroup::Alpha | ParamGroup::Translation => z[i],
    });
    BodyParams::from_vector(&v)
}

/// `d head_i / d z_i`.
fn head_derivatives(z: &[f64; NUM_PARAMS]) -> [f64; NUM_PARAMS] {
    std::array::from_fn(|i| match ParamGroup::of(i) {
        ParamGroup::Phi => 1.0 - z[i].tanh().powi(2),
        ParamGroup::Beta => 0.5 * (1.0 - z[i].tanh().powi(2)),
        ParamGroup::Scale => z[i].exp(),
        ParamGroup::Alpha | ParamGroup::Translation => 1.0,
    })
}

pub fn forward_cached(w: &RegressorWeights, input: &RegressorInput) -> (BodyParams, ForwardCache) {
    let h1: Vec<f64> = w.layers[0].forward(&input.0).into_iter().map(f64::tanh).collect();
    let h2: Vec<f64> = w.layers[1].forward(&h1).into_iter().map(f64::tanh).collect();
    let out = w.layers[2].forward(&h2);
    let z: [f64; NUM_PARAMS] = std::array::from_fn(|i| out[i]);
    (heads(&z), ForwardCache { h1, h2, z })
}

pub fn forward(w: &RegressorWeights, input: &RegressorInput) -> BodyParams {
    forward_cached(w, input).0
}

/// Deterministic forward pass from a full-resolution image.
pub fn regressor_forward(w: &RegressorWeights, image: &GrayMap) -> BodyParams {
    forward(w, &RegressorInput::from_image(image))
}

/// Pulls an output-space gradient `dL/dTheta` back to the weights.
pub fn backward(
    w: &RegressorWeights,
    input: &RegressorInput,
    cache: &ForwardCache,
    d_params: &[f64; NUM_PARAMS],
) -> RegressorWeights {
    let mut grad = RegressorWeights::zeros();
    backward_into(w, input, cache, d_params, &mut grad);
    grad
}

/// [`backward`], accumulating into `grad`.
pub fn backward_into(
    w: &RegressorWeights,
    input: &RegressorInput,
    cache: &ForwardCache,
    d_params: &[f64; NUM_PARAMS],
    grad: &mut RegressorWeights,
) {
    let dh = head_derivatives(&cache.z);
    let dz: Vec<f64> = (0..NUM_PARAMS).map(|i| d_params[i] * dh[i]).collect();

    fn back(layer: &Dense, g: &mut Dense, x: &[f64], dout: &[f64], want_dx: bool) -> Vec<f64> {
        let mut dx = vec![0.0; if want_dx { layer.inputs } else { 0 }];
        for (o, &d) in dout.iter().enumerate() {
            g.bias[o] += d;
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            let grow = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, xi) in grow.iter_mut().zip(x) {
                *gw += d * xi;
            }
            if want_dx {
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += d * wi;
                }
            }
        }
        dx
    }

    let (g01, g2) = grad.layers.split_at_mut(2);
    let (g0, g1) = g01.split_at_mut(1);
    let dh2 = back(&w.layers[2], &mut g2[0], &cache.h2, &dz, true);
    let da2: Vec<f64> = dh2.iter().zip(&cache.h2).map(|(d, h)| d * (1.0 - h * h)).collect();
    let dh1 = back(&w.layers[1], &mut g1[0], &cache.h1, &da2, true);
    let da1: Vec<f64> = dh1.iter().zip(&cache.h1).map(|(d, h)| d * (1.0 - h * h)).collect();
    back(&w.layers[0], &mut g0[0], &input.0, &da1, false);
}

/// Scaled squared distance between two parameter sets.
pub fn param_loss(pred: &BodyParams, target: &BodyParams) -> f64 {
    let (p, t) = (pred.to_vector(), target.to_vector());
    (0..NUM_PARAMS)
        .map(|i| ((p[i] - t[i]) / param_scale(i)).powi(2))
        .sum()
}

/// `d param_loss / d pred`.
pub fn param_loss_grad(pred: &BodyParams, target: &BodyParams) -> [f64; NUM_PARAMS] {
    let (p, t) = (pred.to_vector(), target.to_vector());
    std::array::from_fn(|i| 2.0 * (p[i] - t[i]) / param_scale(i).powi(2))
}

/// Adam state for one parameter group.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: RegressorWeights,
    v: RegressorWeights,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: RegressorWeights::zeros(),
            v: RegressorWeights::zeros(),
            t: 0,
        }
    }

    pub fn step(&mut self, w: &mut RegressorWeights, grad: &RegressorWeights) {
        if self.lr == 0.0 {
            return;
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in w
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}
