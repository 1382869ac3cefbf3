//! A common interface over the neural scorer and the reference baselines.

use super::{score_pairs, Resources, ScorerModel};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::lexnet::{word_path, word_wup, SynsetGraph};

/// Anything that maps word pairs to (similarity, relatedness). Baselines
/// that produce a single score return it on both axes.
pub trait PairScorer: Sync {
    fn name(&self) -> &str;

    /// One entry per input pair; `None` marks pairs the method cannot score.
    fn score_batch(&self, pairs: &[(String, String)]) -> Result<Vec<Option<(f64, f64)>>>;

    /// Whether the method can score pairs involving `word` at all.
    fn in_vocab(&self, _word: &str) -> bool {
        true
    }
}

pub struct NeuralScorer<'a> {
    pub model: &'a ScorerModel,
    pub resources: &'a Resources,
}

impl PairScorer for NeuralScorer<'_> {
    fn name(&self) -> &str {
        "neural"
    }

    fn in_vocab(&self, word: &str) -> bool {
        self.resources.table.contains(word)
    }

    fn score_batch(&self, pairs: &[(String, String)]) -> Result<Vec<Option<(f64, f64)>>> {
        score_pairs(self.model, pairs, self.resources)?
            .into_iter()
            .map(|r| match r {
                Ok(s) => Ok(Some(s)),
                Err(Error::OutOfVocabulary(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }
}

/// Raw embedding cosine.
pub struct CosineBaseline<'a> {
    pub table: &'a EmbeddingTable,
}

impl PairScorer for CosineBaseline<'_> {
    fn name(&self) -> &str {
        "cosine"
    }

    fn in_vocab(&self, word: &str) -> bool {
        self.table.contains(word)
    }

    fn score_batch(&self, pairs: &[(String, String)]) -> Result<Vec<Option<(f64, f64)>>> {
        Ok(pairs
            .iter()
            .map(|(a, b)| self.table.cosine_words(a, b).ok().map(|c| (c, c)))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordnetMeasure {
    Path,
    WuPalmer,
}

/// Word-level WordNet measure (maximum over comparable synset pairs).
/// Words missing from WordNet are unscorable; present words with no
/// comparable synsets score 0.
pub struct WordnetBaseline<'a> {
    pub graph: &'a SynsetGraph,
    pub measure: WordnetMeasure,
}

impl PairScorer for WordnetBaseline<'_> {
    fn name(&self) -> &str {
        match self.measure {
            WordnetMeasure::Path => "wn-path",
            WordnetMeasure::WuPalmer => "wn-wup",
        }
    }

    fn in_vocab(&self, word: &str) -> bool {
        self.graph.contains(word)
    }

    fn score_batch(&self, pairs: &[(String, String)]) -> Result<Vec<Option<(f64, f64)>>> {
        Ok(pairs
            .iter()
            .map(|(a, b)| {
                if !self.graph.contains(a) || !self.graph.contains(b) {
                    return None;
                }
                let v = match self.measure {
                    WordnetMeasure::Path => word_path(self.graph, a, b),
                    WordnetMeasure::WuPalmer => word_wup(self.graph, a, b),
                }
                .unwrap_or(0.0);
                Some((v, v))
            })
            .collect())
    }
}
