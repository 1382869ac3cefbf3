//! WordNet and ConceptNet ingestion plus the lexical-network features.

pub mod conceptnet;
pub mod ic;
pub mod measures;
pub mod wordnet;

pub use conceptnet::{parse_conceptnet, ConceptEdges, ConceptReport, Relation};
pub use ic::InformationContent;
pub use measures::{assemble_features, word_path, word_wup, LexFeatures};
pub use wordnet::{parse_wordnet, Node, Pos, SynsetGraph, SynsetId};

use std::collections::HashMap;
use std::path::Path;

use crate::error::Result;

/// A parsed WordNet together with the information content used by Lin and
/// Jiang–Conrath.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub graph: SynsetGraph,
    pub ic: InformationContent,
}

impl Lexicon {
    pub fn new(graph: SynsetGraph, ic: InformationContent) -> Self {
        Self { graph, ic }
    }

    /// Loads the database; IC comes from `ic_file` if given, otherwise from
    /// the database's sense tag counts (add-one smoothed), otherwise from
    /// add-one counts alone.
    pub fn load(wordnet_dir: &Path, ic_file: Option<&Path>) -> Result<Self> {
        let (graph, report) = parse_wordnet(wordnet_dir)?;
        log::info!("wordnet: {:?} synsets, {} index entries", report.synsets_per_pos, report.index_entries);
        let ic = match ic_file {
            Some(p) => InformationContent::load(p, &graph)?,
            None => {
                let own = wordnet::read_sense_tag_counts(wordnet_dir, &graph)?.unwrap_or_default();
                InformationContent::from_counts(&graph, &own, 1.0)
            }
        };
        Ok(Self { graph, ic })
    }

    pub fn features(&self, w1: &str, w2: &str) -> LexFeatures {
        assemble_features(&self.graph, &self.ic, w1, w2)
    }

    /// Uniform add-one IC, for fixtures without tag counts.
    pub fn with_uniform_ic(graph: SynsetGraph) -> Self {
        let ic = InformationContent::from_counts(&graph, &HashMap::new(), 1.0);
        Self { graph, ic }
    }
}
