//! The two-headed similarity / relatedness scorer.

pub mod checkpoint;
pub mod features;
pub mod gradcheck;
pub mod methods;
pub mod model;
pub mod train;

use ndarray::Array2;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint};
pub use methods::{CosineBaseline, NeuralScorer, PairScorer, WordnetBaseline, WordnetMeasure};
pub use features::{featurize, FeatureVariant, PairFeatures, Resources};
pub use model::{loss, Mode, ModelConfig, ScorerModel};
pub use train::{train, SplitMode, TrainOutcome, TrainingConfig, TrainingLog};

use crate::error::{Error, Result};

fn check_resources(model: &ScorerModel, res: &Resources) -> Result<()> {
    if res.table.dimension() != model.config.embedding_dim {
        return Err(Error::ConfigMismatch(format!(
            "model expects {}-d embeddings ({}), table {} is {}-d",
            model.config.embedding_dim,
            model.config.embedding,
            res.table.name(),
            res.table.dimension()
        )));
    }
    if model.config.use_wordnet && res.lexicon.is_none() {
        return Err(Error::ConfigMismatch("model was trained with WordNet features but none are loaded".into()));
    }
    Ok(())
}

/// Scores an unordered pair: the mean of both word orders, so the result
/// does not depend on argument order.
pub fn score_pair(model: &ScorerModel, w1: &str, w2: &str, res: &Resources) -> Result<(f64, f64)> {
    let out = score_pairs(model, &[(w1, w2)], res)?;
    out.into_iter().next().expect("one result")
}

/// Batched [`score_pair`]; one result per input pair, OOV pairs as errors.
pub fn score_pairs<S: AsRef<str>>(model: &ScorerModel, pairs: &[(S, S)], res: &Resources) -> Result<Vec<Result<(f64, f64)>>> {
    check_resources(model, res)?;
    let variant = model.config.variant;
    let d = res.table.dimension();
    let cols = model.input_dim();
    let mut results: Vec<Result<(f64, f64)>> = Vec::with_capacity(pairs.len());
    let mut rows: Vec<usize> = Vec::new();
    let mut feats: Vec<(usize, usize, [f64; features::LEX_DIM])> = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (a, b) = (a.as_ref(), b.as_ref());
        let ia = res.table.index_of(a);
        let ib = res.table.index_of(b);
        match (ia, ib) {
            (Some(ia), Some(ib)) => {
                let lex = if model.config.use_wordnet {
                    res.lex(a, b).to_array()
                } else {
                    [0.0; features::LEX_DIM]
                };
                rows.push(i);
                feats.push((ia, ib, lex));
                results.push(Ok((0.0, 0.0)));
            }
            (None, _) => results.push(Err(Error::OutOfVocabulary(a.to_string()))),
            (_, None) => results.push(Err(Error::OutOfVocabulary(b.to_string()))),
        }
    }
    for (chunk_rows, chunk) in rows.chunks(512).zip(feats.chunks(512)) {
        let mut x = Array2::zeros((2 * chunk.len(), cols));
        for (k, (ia, ib, lex)) in chunk.iter().enumerate() {
            for (r, (p, q)) in [(2 * k, (*ia, *ib)), (2 * k + 1, (*ib, *ia))] {
                let row = x.row_mut(r).into_slice().expect("standard layout");
                features::embed_block(res.table.row(p), res.table.row(q), variant, &mut row[..4 * d]);
                row[4 * d..].copy_from_slice(lex);
            }
        }
        let (s, r) = model.forward_batch(x.view(), Mode::Eval)?;
        for (k, &i) in chunk_rows.iter().enumerate() {
            results[i] = Ok((0.5 * (s[2 * k] + s[2 * k + 1]), 0.5 * (r[2 * k] + r[2 * k + 1])));
        }
    }
    Ok(results)
}
