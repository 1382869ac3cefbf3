//! Pair feature construction: four embedding interaction blocks plus the
//! eight lexical-network features.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::lexnet::{LexFeatures, Lexicon};

pub const LEX_DIM: usize = LexFeatures::LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVariant {
    /// `[e1; e2; |e1 - e2|; e1 * e2]`
    #[default]
    Appendix,
    /// `[e1 + e2; e1 - e2; e1 * e2; |e1 - e2|]`
    Maintext,
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureVariant::Appendix => "appendix",
            FeatureVariant::Maintext => "maintext",
        })
    }
}

impl FromStr for FeatureVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appendix" => Ok(FeatureVariant::Appendix),
            "maintext" => Ok(FeatureVariant::Maintext),
            _ => Err(Error::InvalidInput(format!("unknown feature variant {s:?}"))),
        }
    }
}

pub fn input_dim(embedding_dim: usize) -> usize {
    4 * embedding_dim + LEX_DIM
}

/// Writes the `4 * d` interaction block into `out`.
pub fn embed_block(e1: &[f32], e2: &[f32], variant: FeatureVariant, out: &mut [f64]) {
    let d = e1.len();
    debug_assert_eq!(e2.len(), d);
    debug_assert_eq!(out.len(), 4 * d);
    let (b0, rest) = out.split_at_mut(d);
    let (b1, rest) = rest.split_at_mut(d);
    let (b2, b3) = rest.split_at_mut(d);
    for i in 0..d {
        let (a, b) = (e1[i] as f64, e2[i] as f64);
        match variant {
            FeatureVariant::Appendix => {
                b0[i] = a;
                b1[i] = b;
                b2[i] = (a - b).abs();
                b3[i] = a * b;
            }
            FeatureVariant::Maintext => {
                b0[i] = a + b;
                b1[i] = a - b;
                b2[i] = a * b;
                b3[i] = (a - b).abs();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    values: Vec<f64>,
    embedding_dim: usize,
}

impl PairFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn embed_block(&self) -> &[f64] {
        &self.values[..4 * self.embedding_dim]
    }

    pub fn lex_block(&self) -> &[f64] {
        &self.values[4 * self.embedding_dim..]
    }
}

pub fn featurize(
    w1: &str,
    w2: &str,
    table: &EmbeddingTable,
    lex: &LexFeatures,
    variant: FeatureVariant,
) -> Result<PairFeatures> {
    let e1 = table.get(w1).ok_or_else(|| Error::OutOfVocabulary(w1.to_string()))?;
    let e2 = table.get(w2).ok_or_else(|| Error::OutOfVocabulary(w2.to_string()))?;
    let d = table.dimension();
    let mut values = vec![0.0; input_dim(d)];
    embed_block(e1, e2, variant, &mut values[..4 * d]);
    values[4 * d..].copy_from_slice(&lex.to_array());
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite feature for ({w1}, {w2})")));
    }
    Ok(PairFeatures {
        values,
        embedding_dim: d,
    })
}

/// Everything needed to featurize a pair: the embedding table and, unless
/// the lexical block is switched off, a WordNet lexicon.
#[derive(Debug, Clone)]
pub struct Resources {
    pub table: EmbeddingTable,
    pub lexicon: Option<Lexicon>,
}

impl Resources {
    pub fn new(table: EmbeddingTable, lexicon: Option<Lexicon>) -> Self {
        Self { table, lexicon }
    }

    /// Lexical features, all zero when no lexicon is attached.
    pub fn lex(&self, w1: &str, w2: &str) -> LexFeatures {
        self.lexicon
            .as_ref()
            .map(|l| l.features(w1, w2))
            .unwrap_or_default()
    }

    pub fn featurize(&self, w1: &str, w2: &str, variant: FeatureVariant) -> Result<PairFeatures> {
        featurize(w1, w2, &self.table, &self.lex(w1, w2), variant)
    }
}
