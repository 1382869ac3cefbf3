//! Two-headed MLP: `input -> 256 -> 64` trunk (Linear + GELU + Dropout),
//! then one logistic unit per head.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::features::{input_dim, FeatureVariant};
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub dropout: f64,
}

impl Architecture {
    pub fn standard(embedding_dim: usize) -> Self {
        Self {
            input: input_dim(embedding_dim),
            hidden1: 256,
            hidden2: 64,
            dropout: 0.4,
        }
    }

    pub fn param_count(&self) -> usize {
        self.input * self.hidden1 + self.hidden1 + self.hidden1 * self.hidden2 + self.hidden2 + 2 * (self.hidden2 + 1)
    }
}

/// Everything a checkpoint records besides the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub variant: FeatureVariant,
    pub embedding: String,
    pub embedding_dim: usize,
    pub use_wordnet: bool,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(embedding: &str, embedding_dim: usize, variant: FeatureVariant, use_wordnet: bool, seed: u64) -> Self {
        Self {
            architecture: Architecture::standard(embedding_dim),
            variant,
            embedding: embedding.to_string(),
            embedding_dim,
            use_wordnet,
            seed,
        }
    }
}

/// Weight tensors. Also used to hold gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w_sim: Array1<f64>,
    pub b_sim: Array1<f64>,
    pub w_rel: Array1<f64>,
    pub b_rel: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 8] = ["w1", "b1", "w2", "b2", "w_sim", "b_sim", "w_rel", "b_rel"];

impl Params {
    pub fn zeros(a: &Architecture) -> Self {
        Self {
            w1: Array2::zeros((a.input, a.hidden1)),
            b1: Array1::zeros(a.hidden1),
            w2: Array2::zeros((a.hidden1, a.hidden2)),
            b2: Array1::zeros(a.hidden2),
            w_sim: Array1::zeros(a.hidden2),
            b_sim: Array1::zeros(1),
            w_rel: Array1::zeros(a.hidden2),
            b_rel: Array1::zeros(1),
        }
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            self.w1.as_slice().unwrap(),
            self.b1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.b2.as_slice().unwrap(),
            self.w_sim.as_slice().unwrap(),
            self.b_sim.as_slice().unwrap(),
            self.w_rel.as_slice().unwrap(),
            self.b_rel.as_slice().unwrap(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            self.w1.as_slice_mut().unwrap(),
            self.b1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.b2.as_slice_mut().unwrap(),
            self.w_sim.as_slice_mut().unwrap(),
            self.b_sim.as_slice_mut().unwrap(),
            self.w_rel.as_slice_mut().unwrap(),
            self.b_rel.as_slice_mut().unwrap(),
        ]
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Rounds every value to the nearest `f32`, so checkpoints are exact.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }
}

pub enum Mode<'a> {
    Eval,
    /// Dropout active, masks drawn from the given generator.
    Train(&'a mut ChaCha8Rng),
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-example loss: squared error on each head plus `lambda` times the
/// squared error of the predicted gap `sim - rel`.
pub fn loss(pred: (f64, f64), label: (f64, f64), lambda: f64) -> f64 {
    let gap = (pred.0 - pred.1) - (label.0 - label.1);
    (pred.0 - label.0).powi(2) + (pred.1 - label.1).powi(2) + lambda * gap * gap
}

struct Cache {
    z1: Array2<f64>,
    m1: Option<Array2<f64>>,
    h1: Array2<f64>,
    z2: Array2<f64>,
    m2: Option<Array2<f64>>,
    h2: Array2<f64>,
    sim: Array1<f64>,
    rel: Array1<f64>,
}

fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn((rows, cols), || if rng.random::<f64>() < p { 0.0 } else { keep })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    pub config: ModelConfig,
    pub params: Params,
}

impl ScorerModel {
    /// Fan-in uniform initialisation, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases alike.
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let a = &config.architecture;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Params::zeros(a);
        let fan_ins = [a.input, a.input, a.hidden1, a.hidden1, a.hidden2, a.hidden2, a.hidden2, a.hidden2];
        for (t, fan_in) in p.tensors_mut().into_iter().zip(fan_ins) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in t.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        p.round_to_f32();
        Self { config, params: p }
    }

    pub fn input_dim(&self) -> usize {
        self.config.architecture.input
    }

    fn forward_cached(&self, x: ArrayView2<f64>, mode: Mode) -> Cache {
        let p = &self.params;
        let drop = self.config.architecture.dropout;
        let mut rng = match mode {
            Mode::Train(r) if drop > 0.0 => Some(r),
            _ => None,
        };
        let z1 = x.dot(&p.w1) + &p.b1;
        let mut h1 = z1.mapv(gelu);
        let m1 = rng.as_mut().map(|r| dropout_mask(h1.nrows(), h1.ncols(), drop, r));
        if let Some(m) = &m1 {
            h1 *= m;
        }
        let z2 = h1.dot(&p.w2) + &p.b2;
        let mut h2 = z2.mapv(gelu);
        let m2 = rng.as_mut().map(|r| dropout_mask(h2.nrows(), h2.ncols(), drop, r));
        if let Some(m) = &m2 {
            h2 *= m;
        }
        let sim = (h2.dot(&p.w_sim) + p.b_sim[0]).mapv(sigmoid);
        let rel = (h2.dot(&p.w_rel) + p.b_rel[0]).mapv(sigmoid);
        Cache {
            z1,
            m1,
            h1,
            z2,
            m2,
            h2,
            sim,
            rel,
        }
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    /// Batch forward pass; rows of `x` are feature vectors.
    pub fn forward_batch(&self, x: ArrayView2<f64>, mode: Mode) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_input(x.ncols())?;
        let c = self.forward_cached(x, mode);
        Ok((c.sim, c.rel))
    }

    pub fn forward(&self, features: &[f64], mode: Mode) -> Result<(f64, f64)> {
        let x = ArrayView2::from_shape((1, features.len()), features).expect("row view");
        let (s, r) = self.forward_batch(x, mode)?;
        Ok((s[0], r[0]))
    }

    /// Mean batch loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        target_sim: ArrayView1<f64>,
        target_rel: ArrayView1<f64>,
        lambda: f64,
        mode: Mode,
    ) -> Result<(f64, Params)> {
        self.check_input(x.ncols())?;
        let p = &self.params;
        let c = self.forward_cached(x, mode);
        let n = x.nrows() as f64;

        let gap = (&c.sim - &c.rel) - (&target_sim - &target_rel);
        let es = &c.sim - &target_sim;
        let er = &c.rel - &target_rel;
        let total = (es.mapv(|v| v * v) + er.mapv(|v| v * v) + gap.mapv(|v| lambda * v * v)).sum() / n;

        let d_sim = (&es * 2.0 + &gap * (2.0 * lambda)) / n;
        let d_rel = (&er * 2.0 - &gap * (2.0 * lambda)) / n;
        let dz_sim = d_sim * c.sim.mapv(|s| s * (1.0 - s));
        let dz_rel = d_rel * c.rel.mapv(|r| r * (1.0 - r));

        let mut g = Params::zeros(&self.config.architecture);
        g.w_sim = c.h2.t().dot(&dz_sim);
        g.b_sim[0] = dz_sim.sum();
        g.w_rel = c.h2.t().dot(&dz_rel);
        g.b_rel[0] = dz_rel.sum();

        let dz_sim_col = dz_sim.insert_axis(Axis(1));
        let dz_rel_col = dz_rel.insert_axis(Axis(1));
        let w_sim_row = p.w_sim.view().insert_axis(Axis(0));
        let w_rel_row = p.w_rel.view().insert_axis(Axis(0));
        let mut dh2 = dz_sim_col.dot(&w_sim_row) + dz_rel_col.dot(&w_rel_row);
        if let Some(m) = &c.m2 {
            dh2 *= m;
        }
        let dz2 = dh2 * c.z2.mapv(gelu_grad);
        g.w2 = standard(c.h1.t().dot(&dz2));
        g.b2 = dz2.sum_axis(Axis(0));

        let mut dh1 = dz2.dot(&p.w2.t());
        if let Some(m) = &c.m1 {
            dh1 *= m;
        }
        let dz1 = dh1 * c.z1.mapv(gelu_grad);
        g.w1 = standard(x.t().dot(&dz1));
        g.b1 = dz1.sum_axis(Axis(0));
        Ok((total, g))
    }

    /// Mean batch loss in evaluation mode.
    pub fn batch_loss(&self, x: ArrayView2<f64>, target_sim: ArrayView1<f64>, target_rel: ArrayView1<f64>, lambda: f64) -> Result<f64> {
        let (s, r) = self.forward_batch(x, Mode::Eval)?;
        let n = s.len() as f64;
        Ok((0..s.len())
            .map(|i| loss((s[i], r[i]), (target_sim[i], target_rel[i]), lambda))
            .sum::<f64>()
            / n)
    }
}
