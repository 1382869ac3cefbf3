//! Word-pair records shared by curation, annotation and training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "wn-synonym")]
    WnSynonym,
    #[serde(rename = "wn-cohyponym")]
    WnCohyponym,
    #[serde(rename = "wn-hypernym")]
    WnHypernym,
    #[serde(rename = "wn-antonym")]
    WnAntonym,
    #[serde(rename = "cn-RelatedTo")]
    CnRelatedTo,
    #[serde(rename = "cn-AtLocation")]
    CnAtLocation,
    #[serde(rename = "cn-PartOf")]
    CnPartOf,
    #[serde(rename = "cn-UsedFor")]
    CnUsedFor,
    #[serde(rename = "cn-Causes")]
    CnCauses,
    #[serde(rename = "emb-neighbor")]
    EmbNeighbor,
    #[serde(rename = "neg-common")]
    NegCommon,
    #[serde(rename = "neg-far")]
    NegFar,
    #[serde(rename = "neg-crossdomain")]
    NegCrossdomain,
    #[serde(rename = "neg-crosspos")]
    NegCrosspos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Wordnet,
    Conceptnet,
    Embedding,
    Negative,
}

impl Source {
    pub const ALL: [Source; 14] = [
        Source::WnSynonym,
        Source::WnCohyponym,
        Source::WnHypernym,
        Source::WnAntonym,
        Source::CnRelatedTo,
        Source::CnAtLocation,
        Source::CnPartOf,
        Source::CnUsedFor,
        Source::CnCauses,
        Source::EmbNeighbor,
        Source::NegCommon,
        Source::NegFar,
        Source::NegCrossdomain,
        Source::NegCrosspos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::WnSynonym => "wn-synonym",
            Source::WnCohyponym => "wn-cohyponym",
            Source::WnHypernym => "wn-hypernym",
            Source::WnAntonym => "wn-antonym",
            Source::CnRelatedTo => "cn-RelatedTo",
            Source::CnAtLocation => "cn-AtLocation",
            Source::CnPartOf => "cn-PartOf",
            Source::CnUsedFor => "cn-UsedFor",
            Source::CnCauses => "cn-Causes",
            Source::EmbNeighbor => "emb-neighbor",
            Source::NegCommon => "neg-common",
            Source::NegFar => "neg-far",
            Source::NegCrossdomain => "neg-crossdomain",
            Source::NegCrosspos => "neg-crosspos",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Source::WnSynonym | Source::WnCohyponym | Source::WnHypernym | Source::WnAntonym => Family::Wordnet,
            Source::CnRelatedTo | Source::CnAtLocation | Source::CnPartOf | Source::CnUsedFor | Source::CnCauses => {
                Family::Conceptnet
            }
            Source::EmbNeighbor => Family::Embedding,
            _ => Family::Negative,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown pair source {s:?}")))
    }
}

/// Orders two words canonically (smaller first).
pub fn canonical(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidatePair {
    pub w1: String,
    pub w2: String,
    pub source: Source,
}

impl CandidatePair {
    /// Lowercases and orders the words; rejects self-pairs.
    pub fn new(a: &str, b: &str, source: Source) -> Result<Self> {
        let (w1, w2) = canonical(&a.to_lowercase(), &b.to_lowercase());
        if w1 == w2 {
            return Err(Error::InvalidInput(format!("self-pair ({a}, {b})")));
        }
        Ok(Self { w1, w2, source })
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.w1, &self.w2)
    }
}

/// An annotated pair. `sim` and `rel` lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub w1: String,
    pub w2: String,
    pub sim: f64,
    pub rel: f64,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub annotator: String,
}

impl ScoredPair {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sim) || !(0.0..=1.0).contains(&self.rel) {
            return Err(Error::InvalidInput(format!(
                "scores for ({}, {}) outside [0, 1]",
                self.w1, self.w2
            )));
        }
        Ok(())
    }
}
