//! Candidate pair generation and filtering for the training dataset.

mod filter;
mod generate;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingTable, FrequencyTable};
use crate::error::{Error, Result};
use crate::lexnet::{ConceptEdges, SynsetGraph};
use crate::pairs::{canonical, CandidatePair, Source};

pub use filter::filter_pipeline;
pub use generate::{cluster_neighbors, generate_candidates};

/// Default per-source counts of the final dataset.
pub fn default_quotas() -> BTreeMap<Source, usize> {
    use Source::*;
    BTreeMap::from([
        (WnSynonym, 3800),
        (WnCohyponym, 12100),
        (WnHypernym, 1700),
        (WnAntonym, 500),
        (CnRelatedTo, 3000),
        (CnAtLocation, 2000),
        (CnPartOf, 900),
        (CnUsedFor, 300),
        (CnCauses, 200),
        (EmbNeighbor, 7646),
        (NegCommon, 15000),
        (NegFar, 2100),
        (NegCrossdomain, 1200),
        (NegCrosspos, 1000),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    /// Target count per source after filtering. Missing sources count as 0.
    pub quotas: BTreeMap<Source, usize>,
    /// Candidates generated per unit of quota, to leave room for the filters.
    pub oversample: f64,
    pub neighbors_per_word: usize,
    /// Neighbors at or above this cosine to a group's first member join that group.
    pub cluster_threshold: f64,
    pub per_cluster: usize,
    pub far_threshold: f64,
    pub common_zipf: f64,
    pub zipf_floor: f64,
    pub degree_cap: usize,
    /// Co-hyponym pairs drawn per shared hypernym.
    pub max_pairs_per_parent: usize,
    /// Randomly subsample each source down to its quota after filtering.
    pub trim_to_quota: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            quotas: default_quotas(),
            oversample: 2.0,
            neighbors_per_word: 20,
            cluster_threshold: 0.7,
            per_cluster: 3,
            far_threshold: 0.1,
            common_zipf: 4.5,
            zipf_floor: 2.0,
            degree_cap: 50,
            max_pairs_per_parent: 50,
            trim_to_quota: true,
            seed: 0,
            workers: 1,
        }
    }
}

impl CurationConfig {
    pub fn quota(&self, source: Source) -> usize {
        self.quotas.get(&source).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("curation config: {m}")));
        if !(self.oversample >= 1.0 && self.oversample <= 100.0) {
            return bad("oversample must lie in [1, 100]");
        }
        if self.neighbors_per_word == 0 || self.per_cluster == 0 {
            return bad("neighbors_per_word and per_cluster must be positive");
        }
        if !(-1.0..=1.0).contains(&self.cluster_threshold) || !(-1.0..=1.0).contains(&self.far_threshold) {
            return bad("cosine thresholds must lie in [-1, 1]");
        }
        if !(0.0..=10.0).contains(&self.zipf_floor) || !(0.0..=10.0).contains(&self.common_zipf) {
            return bad("zipf thresholds must lie in [0, 10]");
        }
        if self.degree_cap == 0 || self.max_pairs_per_parent == 0 || self.workers == 0 {
            return bad("degree_cap, max_pairs_per_parent and workers must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub per_source: BTreeMap<Source, usize>,
    pub total: usize,
}

impl StageCount {
    pub fn of(stage: &str, pairs: &[CandidatePair]) -> Self {
        let mut per_source = BTreeMap::new();
        for p in pairs {
            *per_source.entry(p.source).or_insert(0) += 1;
        }
        Self {
            stage: stage.to_string(),
            per_source,
            total: pairs.len(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub vocabulary: usize,
    /// Counts after each stage, in order.
    pub stages: Vec<StageCount>,
    /// Sources whose generation fell short of the requested count, with the deficit.
    pub shortfall: BTreeMap<Source, usize>,
    pub partial: bool,
    pub final_per_source: BTreeMap<Source, usize>,
    pub final_count: usize,
    /// degree → number of words with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
}

impl CurationReport {
    pub fn set_final(&mut self, pairs: &[CandidatePair]) {
        let last = StageCount::of("final", pairs);
        self.final_per_source = last.per_source;
        self.final_count = last.total;
        self.degree_histogram = degree_histogram(pairs);
    }

    pub fn max_degree(&self) -> usize {
        self.degree_histogram.keys().next_back().copied().unwrap_or(0)
    }
}

pub fn degrees(pairs: &[CandidatePair]) -> BTreeMap<&str, usize> {
    let mut deg = BTreeMap::new();
    for p in pairs {
        *deg.entry(p.w1.as_str()).or_insert(0) += 1;
        *deg.entry(p.w2.as_str()).or_insert(0) += 1;
    }
    deg
}

pub fn degree_histogram(pairs: &[CandidatePair]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for d in degrees(pairs).into_values() {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}

/// Lowercase ASCII letters only.
pub fn is_plain_word(w: &str) -> bool {
    !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// Single-token WordNet lemmas that also appear in `lexicon`.
pub fn build_vocabulary<I, S>(g: &SynsetGraph, lexicon: I) -> Result<BTreeSet<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if g.is_empty() {
        return Err(Error::InvalidInput("WordNet graph is empty".into()));
    }
    let lexicon: BTreeSet<String> = lexicon.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect();
    if lexicon.is_empty() {
        return Err(Error::InvalidInput("lexicon is empty".into()));
    }
    let vocab: BTreeSet<String> = g
        .lemmas()
        .into_iter()
        .filter(|w| is_plain_word(w) && lexicon.contains(*w))
        .map(str::to_string)
        .collect();
    if vocab.is_empty() {
        return Err(Error::InvalidInput("WordNet lemmas and lexicon do not intersect".into()));
    }
    Ok(vocab)
}

/// One word per line (first whitespace-separated field); blank lines skipped.
pub fn load_word_list(path: &Path) -> Result<Vec<String>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if let Some(w) = line.split_whitespace().next() {
            out.push(w.to_lowercase());
        }
    }
    Ok(out)
}

/// Word pairs from a `w1<TAB>w2[...]` file, canonically ordered. Lines
/// starting with `#` and lines with fewer than two fields are ignored.
pub fn load_exclusions(path: &Path) -> Result<BTreeSet<(String, String)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeSet::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        if let (Some(a), Some(b)) = (fields.next(), fields.next()) {
            let (a, b) = (a.trim().to_lowercase(), b.trim().to_lowercase());
            if !a.is_empty() && !b.is_empty() {
                out.insert(canonical(&a, &b));
            }
        }
    }
    Ok(out)
}

/// Inputs for a full curation run.
pub struct CurationInputs<'a> {
    pub vocab: &'a BTreeSet<String>,
    pub graph: &'a SynsetGraph,
    pub edges: &'a ConceptEdges,
    pub table: &'a EmbeddingTable,
    pub freq: &'a FrequencyTable,
    pub exclusions: &'a BTreeSet<(String, String)>,
}

/// Generation followed by filtering, with a merged report.
pub fn curate(inputs: &CurationInputs<'_>, cfg: &CurationConfig) -> Result<(Vec<CandidatePair>, CurationReport)> {
    let (pool, mut report) = generate_candidates(inputs.vocab, inputs.graph, inputs.edges, inputs.table, inputs.freq, cfg)?;
    let (pairs, filtered) = filter_pipeline(pool, inputs.freq, inputs.exclusions, cfg)?;
    report.stages.extend(filtered.stages);
    report.set_final(&pairs);
    Ok((pairs, report))
}

/// Letters-only test word for index `i` (`a`, `b`, ..., `ba`, ...).
#[cfg(test)]
pub(crate) fn tests_word(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn default_quotas_sum_to_family_totals() {
        let q = default_quotas();
        let fam = |f| q.iter().filter(|(s, _)| s.family() == f).map(|(_, n)| n).sum::<usize>();
        use crate::pairs::Family::*;
        assert_eq!(fam(Wordnet), 18100);
        assert_eq!(fam(Conceptnet), 6400);
        assert_eq!(fam(Embedding), 7646);
        assert_eq!(fam(Negative), 19300);
    }

    #[test]
    fn exclusions_are_canonical() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# header\nTiger\tcat\t7.35\ncat\ttiger\nlonely\n").unwrap();
        let ex = load_exclusions(f.path()).unwrap();
        assert_eq!(ex.len(), 1);
        assert!(ex.contains(&("cat".to_string(), "tiger".to_string())));
    }

    #[test]
    fn config_validation() {
        assert!(CurationConfig::default().validate().is_ok());
        let bad = CurationConfig {
            far_threshold: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
