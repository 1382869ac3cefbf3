//! Mini-batch training with AdamW, per-epoch cosine annealing and early
//! stopping on validation loss.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{embed_block, FeatureVariant, Resources, LEX_DIM};
use super::model::{loss, Mode, ModelConfig, Params, ScorerModel};
use crate::error::{Error, Result};
use crate::lexnet::LexFeatures;
use crate::pairs::ScoredPair;
use crate::stats::spearman;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    #[default]
    PairHeldout,
    WordHeldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    /// train / validation / test fractions
    pub split: [f64; 3],
    pub lambda_gap: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub subset_fraction: f64,
    pub variant: FeatureVariant,
    pub use_wordnet: bool,
    pub dropout: f64,
    /// Present each training pair in a random word order.
    pub swap_order: bool,
    pub workers: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            lr_min: 3e-5,
            weight_decay: 0.01,
            batch_size: 64,
            patience: 10,
            max_epochs: 200,
            split: [0.70, 0.15, 0.15],
            lambda_gap: 1.0,
            seed: 0,
            split_mode: SplitMode::PairHeldout,
            subset_fraction: 1.0,
            variant: FeatureVariant::Appendix,
            use_wordnet: true,
            dropout: 0.4,
            swap_order: true,
            workers: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("training config: {m}")));
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split fractions must lie in [0, 1] and sum to 1");
        }
        if !(self.lambda_gap >= 0.0) {
            return bad("lambda_gap must be >= 0");
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return bad("subset_fraction must lie in (0, 1]");
        }
        if !(self.lr > 0.0 && self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return bad("need lr > 0 and 0 <= lr_min <= lr");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        if self.weight_decay < 0.0 {
            return bad("weight_decay must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub val_spearman_sim: f64,
    pub val_spearman_rel: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8}")
    }
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,test_loss,val_spearman_sim,val_spearman_rel\n");
        for r in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.epoch,
                fmt_num(r.train_loss),
                fmt_num(r.val_loss),
                fmt_num(r.test_loss),
                fmt_num(r.val_spearman_sim),
                fmt_num(r.val_spearman_rel)
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub n: usize,
    pub loss: f64,
    pub spearman_sim: f64,
    pub spearman_rel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub n_pairs: usize,
    pub dropped_oov: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val: SplitMetrics,
    pub test: SplitMetrics,
}

pub struct TrainOutcome {
    pub model: ScorerModel,
    pub log: TrainingLog,
    pub summary: TrainSummary,
    /// Pairs of each split (train after subsampling), by dataset index.
    pub splits: [Vec<usize>; 3],
}

/// Pre-resolved example: embedding rows, lexical features, labels.
#[derive(Debug, Clone)]
struct Example {
    row1: usize,
    row2: usize,
    lex: [f64; LEX_DIM],
    sim: f64,
    rel: f64,
}

fn resolve(dataset: &[ScoredPair], res: &Resources, use_wordnet: bool, workers: usize) -> (Vec<Option<Example>>, usize) {
    let one = |p: &ScoredPair| -> Option<Example> {
        let row1 = res.table.index_of(&p.w1)?;
        let row2 = res.table.index_of(&p.w2)?;
        let lex = if use_wordnet {
            res.lex(&p.w1, &p.w2)
        } else {
            LexFeatures::default()
        };
        Some(Example {
            row1,
            row2,
            lex: lex.to_array(),
            sim: p.sim,
            rel: p.rel,
        })
    };
    let workers = workers.max(1).min(dataset.len().max(1));
    let chunk = dataset.len().div_ceil(workers).max(1);
    let out: Vec<Option<Example>> = std::thread::scope(|s| {
        let handles: Vec<_> = dataset
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(one).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("feature worker panicked")).collect()
    });
    let dropped = out.iter().filter(|e| e.is_none()).count();
    (out, dropped)
}

fn assemble(res: &Resources, variant: FeatureVariant, examples: &[&Example], swap: &[bool]) -> Array2<f64> {
    let d = res.table.dimension();
    let cols = 4 * d + LEX_DIM;
    let mut x = Array2::zeros((examples.len(), cols));
    for (i, e) in examples.iter().enumerate() {
        let row = x.row_mut(i).into_slice().expect("standard layout");
        let (a, b) = if swap.get(i).copied().unwrap_or(false) {
            (e.row2, e.row1)
        } else {
            (e.row1, e.row2)
        };
        embed_block(res.table.row(a), res.table.row(b), variant, &mut row[..4 * d]);
        row[4 * d..].copy_from_slice(&e.lex);
    }
    x
}

/// Order-averaged predictions for a set of examples, in chunks.
fn predict(model: &ScorerModel, res: &Resources, examples: &[&Example]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut sims = Vec::with_capacity(examples.len());
    let mut rels = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(512) {
        let fwd = assemble(res, model.config.variant, chunk, &[]);
        let rev = assemble(res, model.config.variant, chunk, &vec![true; chunk.len()]);
        let (s1, r1) = model.forward_batch(fwd.view(), Mode::Eval)?;
        let (s2, r2) = model.forward_batch(rev.view(), Mode::Eval)?;
        for i in 0..chunk.len() {
            sims.push(0.5 * (s1[i] + s2[i]));
            rels.push(0.5 * (r1[i] + r2[i]));
        }
    }
    Ok((sims, rels))
}

fn evaluate(model: &ScorerModel, res: &Resources, examples: &[&Example], lambda: f64) -> Result<SplitMetrics> {
    let (s, r) = predict(model, res, examples)?;
    let ls: Vec<f64> = examples.iter().map(|e| e.sim).collect();
    let lr: Vec<f64> = examples.iter().map(|e| e.rel).collect();
    let total: f64 = (0..s.len()).map(|i| loss((s[i], r[i]), (ls[i], lr[i]), lambda)).sum();
    Ok(SplitMetrics {
        n: s.len(),
        loss: total / s.len() as f64,
        spearman_sim: spearman(&s, &ls).unwrap_or(f64::NAN),
        spearman_rel: spearman(&r, &lr).unwrap_or(f64::NAN),
    })
}

/// Assigns dataset indices to train/val/test.
pub fn split_indices(dataset: &[ScoredPair], usable: &[bool], cfg: &TrainingConfig, rng: &mut ChaCha8Rng) -> [Vec<usize>; 3] {
    let idx: Vec<usize> = (0..dataset.len()).filter(|&i| usable[i]).collect();
    match cfg.split_mode {
        SplitMode::PairHeldout => {
            let mut idx = idx;
            idx.shuffle(rng);
            let n = idx.len();
            let n_train = (n as f64 * cfg.split[0]).round() as usize;
            let n_val = ((n as f64 * cfg.split[1]).round() as usize).min(n - n_train);
            let test = idx.split_off(n_train + n_val);
            let val = idx.split_off(n_train);
            [idx, val, test]
        }
        SplitMode::WordHeldout => {
            // A pair lands in split k only if both words do, so words are
            // drawn with probability proportional to sqrt(fraction).
            let words: BTreeSet<&str> = idx
                .iter()
                .flat_map(|&i| [dataset[i].w1.as_str(), dataset[i].w2.as_str()])
                .collect();
            let weights: Vec<f64> = cfg.split.iter().map(|f| f.sqrt()).collect();
            let norm: f64 = weights.iter().sum();
            let mut assign: HashMap<&str, usize> = HashMap::new();
            for w in words {
                let u: f64 = rng.random::<f64>() * norm;
                let mut acc = 0.0;
                let mut k = 2;
                for (j, wt) in weights.iter().enumerate() {
                    acc += wt;
                    if u < acc {
                        k = j;
                        break;
                    }
                }
                assign.insert(w, k);
            }
            let mut out: [Vec<usize>; 3] = Default::default();
            for i in idx {
                let (a, b) = (assign[dataset[i].w1.as_str()], assign[dataset[i].w2.as_str()]);
                if a == b {
                    out[a].push(i);
                }
            }
            for s in out.iter_mut() {
                s.shuffle(rng);
            }
            out
        }
    }
}

struct AdamW {
    m: Params,
    v: Params,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamW {
    fn new(like: &Params) -> Self {
        let mut m = like.clone();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        Self {
            v: m.clone(),
            m,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &Params, lr: f64, weight_decay: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let g = grads.tensors();
        for (((p, m), v), g) in params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(g)
        {
            for i in 0..p.len() {
                p[i] *= 1.0 - lr * weight_decay;
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Cosine-annealed learning rate for epoch `e` (0-based), no restarts.
pub fn cosine_lr(cfg: &TrainingConfig, epoch: usize) -> f64 {
    let t = epoch as f64 / cfg.max_epochs as f64;
    cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
}

pub fn train(dataset: &[ScoredPair], cfg: &TrainingConfig, res: &Resources) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.use_wordnet && res.lexicon.is_none() {
        return Err(Error::ConfigMismatch("use_wordnet is set but no WordNet lexicon was loaded".into()));
    }
    if dataset.len() < 3 * cfg.batch_size {
        return Err(Error::InvalidInput(format!(
            "dataset has {} pairs, need at least three batches ({})",
            dataset.len(),
            3 * cfg.batch_size
        )));
    }
    for p in dataset {
        p.validate()?;
    }
    let (resolved, dropped) = resolve(dataset, res, cfg.use_wordnet, cfg.workers);
    if dropped > 0 {
        log::warn!("{dropped} pairs dropped: word missing from the embedding table");
    }
    let usable: Vec<bool> = resolved.iter().map(|e| e.is_some()).collect();

    let mut split_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut splits = split_indices(dataset, &usable, cfg, &mut split_rng);
    if cfg.subset_fraction < 1.0 {
        let keep = ((splits[0].len() as f64) * cfg.subset_fraction).ceil() as usize;
        splits[0].truncate(keep.max(1));
    }
    for (name, s) in ["train", "validation", "test"].iter().zip(&splits) {
        if s.is_empty() {
            return Err(Error::InvalidInput(format!("empty {name} split")));
        }
    }
    let pick = |ids: &[usize]| -> Vec<&Example> { ids.iter().map(|&i| resolved[i].as_ref().unwrap()).collect() };
    let (train_ex, val_ex, test_ex) = (pick(&splits[0]), pick(&splits[1]), pick(&splits[2]));

    let mut config = ModelConfig::new(res.table.name(), res.table.dimension(), cfg.variant, cfg.use_wordnet, cfg.seed);
    config.architecture.dropout = cfg.dropout;
    let mut model = ScorerModel::init(config, cfg.seed.wrapping_add(1));
    let mut opt = AdamW::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));

    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Params, usize)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    for epoch in 0..cfg.max_epochs {
        let lr = cosine_lr(cfg, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let ex: Vec<&Example> = batch.iter().map(|&i| train_ex[i]).collect();
            let swap: Vec<bool> = if cfg.swap_order {
                ex.iter().map(|_| rng.random::<bool>()).collect()
            } else {
                Vec::new()
            };
            let x = assemble(res, cfg.variant, &ex, &swap);
            let ys = Array1::from_iter(ex.iter().map(|e| e.sim));
            let yr = Array1::from_iter(ex.iter().map(|e| e.rel));
            let (l, g) = model.loss_and_grad(x.view(), ys.view(), yr.view(), cfg.lambda_gap, Mode::Train(&mut rng))?;
            if !l.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite training loss {l} at epoch {epoch}, batch {b} (lr {lr:.3e})"
                )));
            }
            opt.step(&mut model.params, &g, lr, cfg.weight_decay);
            // weights live at f32 precision so checkpoints reproduce them exactly
            model.params.round_to_f32();
            loss_sum += l * ex.len() as f64;
            seen += ex.len();
        }
        let val = evaluate(&model, res, &val_ex, cfg.lambda_gap)?;
        let test = evaluate(&model, res, &test_ex, cfg.lambda_gap)?;
        if !val.loss.is_finite() {
            return Err(Error::Diverged(format!("non-finite validation loss at epoch {epoch}")));
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            val_loss: val.loss,
            test_loss: test.loss,
            val_spearman_sim: val.spearman_sim,
            val_spearman_rel: val.spearman_rel,
        });
        log::debug!("epoch {epoch}: train {:.5} val {:.5}", loss_sum / seen as f64, val.loss);
        if best.as_ref().is_none_or(|b| val.loss < b.0) {
            best = Some((val.loss, model.params.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (_, params, best_epoch) = best.expect("at least one epoch");
    model.params = params;
    log.best_epoch = best_epoch;
    let val = evaluate(&model, res, &val_ex, cfg.lambda_gap)?;
    let test = evaluate(&model, res, &test_ex, cfg.lambda_gap)?;
    let summary = TrainSummary {
        n_pairs: dataset.len(),
        dropped_oov: dropped,
        n_train: train_ex.len(),
        n_val: val_ex.len(),
        n_test: test_ex.len(),
        best_epoch,
        epochs_run: log.epochs.len(),
        val,
        test,
    };
    Ok(TrainOutcome {
        model,
        log,
        summary,
        splits,
    })
}
