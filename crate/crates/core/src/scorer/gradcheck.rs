//! Central finite-difference check of the analytic gradients.
//!
//! The numerical side re-evaluates the loss from scratch with plain loops
//! (starting from the first-layer pre-activations, which a perturbation of
//! `w1` or `b1` shifts by a known column), so it shares no code with the
//! backward pass.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{gelu, loss, sigmoid, Mode, Params, ScorerModel, TENSOR_NAMES};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: &'static str,
    pub checked: usize,
    pub total: usize,
    /// `|analytic - numeric|_2 / max(|analytic|_2, |numeric|_2)` over the checked entries.
    pub relative_error: f64,
    pub max_abs_diff: f64,
}

fn loss_from_z1(p: &Params, z1: &Array2<f64>, ys: ArrayView1<f64>, yr: ArrayView1<f64>, lambda: f64) -> f64 {
    let (b, h1n) = z1.dim();
    let h2n = p.b2.len();
    let mut total = 0.0;
    let mut h1 = vec![0.0; h1n];
    let mut h2 = vec![0.0; h2n];
    for r in 0..b {
        for j in 0..h1n {
            h1[j] = gelu(z1[[r, j]]);
        }
        for k in 0..h2n {
            let mut z = p.b2[k];
            for j in 0..h1n {
                z += h1[j] * p.w2[[j, k]];
            }
            h2[k] = gelu(z);
        }
        let mut zs = p.b_sim[0];
        let mut zr = p.b_rel[0];
        for k in 0..h2n {
            zs += h2[k] * p.w_sim[k];
            zr += h2[k] * p.w_rel[k];
        }
        total += loss((sigmoid(zs), sigmoid(zr)), (ys[r], yr[r]), lambda);
    }
    total / b as f64
}

fn first_layer(p: &Params, x: ArrayView2<f64>) -> Array2<f64> {
    let (b, inp) = x.dim();
    let h1n = p.b1.len();
    Array2::from_shape_fn((b, h1n), |(r, j)| {
        let mut z = p.b1[j];
        for i in 0..inp {
            z += x[[r, i]] * p.w1[[i, j]];
        }
        z
    })
}

/// Checks every tensor. `max_entries` bounds the number of entries probed
/// per tensor (chosen uniformly with `seed`); `None` probes all of them.
pub fn check_gradients(
    model: &ScorerModel,
    x: ArrayView2<f64>,
    ys: ArrayView1<f64>,
    yr: ArrayView1<f64>,
    lambda: f64,
    eps: f64,
    max_entries: Option<usize>,
    seed: u64,
) -> Result<Vec<TensorCheck>> {
    let (_, analytic) = model.loss_and_grad(x, ys, yr, lambda, Mode::Eval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = model.params.clone();
    let z1 = first_layer(&base, x);
    let h1n = base.b1.len();
    let mut out = Vec::new();
    for (t, name) in TENSOR_NAMES.iter().enumerate() {
        let total = analytic.tensors()[t].len();
        let idx: Vec<usize> = match max_entries {
            Some(k) if k < total => {
                let mut v = sample(&mut rng, total, k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..total).collect(),
        };
        let (mut diff2, mut a2, mut n2, mut max_abs) = (0.0, 0.0, 0.0, 0.0f64);
        for &e in &idx {
            let eval = |delta: f64| -> f64 {
                match t {
                    0 => {
                        let (i, j) = (e / h1n, e % h1n);
                        let mut z = z1.clone();
                        for r in 0..z.nrows() {
                            z[[r, j]] += delta * x[[r, i]];
                        }
                        loss_from_z1(&base, &z, ys, yr, lambda)
                    }
                    1 => {
                        let mut z = z1.clone();
                        for r in 0..z.nrows() {
                            z[[r, e]] += delta;
                        }
                        loss_from_z1(&base, &z, ys, yr, lambda)
                    }
                    _ => {
                        let mut p = base.clone();
                        p.tensors_mut()[t][e] += delta;
                        loss_from_z1(&p, &z1, ys, yr, lambda)
                    }
                }
            };
            let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
            let a = analytic.tensors()[t][e];
            diff2 += (a - numeric).powi(2);
            a2 += a * a;
            n2 += numeric * numeric;
            max_abs = max_abs.max((a - numeric).abs());
        }
        let denom = a2.sqrt().max(n2.sqrt());
        let relative_error = if denom == 0.0 { 0.0 } else { diff2.sqrt() / denom };
        out.push(TensorCheck {
            name,
            checked: idx.len(),
            total,
            relative_error,
            max_abs_diff: max_abs,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::features::FeatureVariant;
    use super::super::model::{Architecture, ModelConfig};
    use super::*;
    use rand::Rng;

    fn batch(rows: usize, cols: usize, seed: u64) -> (Array2<f64>, ndarray::Array1<f64>, ndarray::Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0));
        let ys = ndarray::Array1::from_shape_simple_fn(rows, || rng.random::<f64>());
        let yr = ndarray::Array1::from_shape_simple_fn(rows, || rng.random::<f64>());
        (x, ys, yr)
    }

    #[test]
    fn exhaustive_on_small_model() {
        let mut config = ModelConfig::new("toy", 2, FeatureVariant::Appendix, true, 0);
        config.architecture = Architecture {
            input: 16,
            hidden1: 12,
            hidden2: 6,
            dropout: 0.4,
        };
        let model = ScorerModel::init(config, 3);
        let (x, ys, yr) = batch(5, 16, 11);
        for lambda in [0.0, 1.0] {
            for c in check_gradients(&model, x.view(), ys.view(), yr.view(), lambda, 1e-4, None, 0).unwrap() {
                assert_eq!(c.checked, c.total);
                assert!(c.relative_error < 1e-6, "{} λ={lambda}: {}", c.name, c.relative_error);
            }
        }
    }
}
