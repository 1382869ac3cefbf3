//! Sense-preservation probe: does the scorer keep every sense of a
//! polysemous word apart from random words?

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curation::is_plain_word;
use crate::error::{Error, Result};
use crate::lexnet::{ConceptEdges, Pos, SynsetGraph};
use crate::scorer::PairScorer;
use crate::stats::{cohens_d, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Taxonomic,
    Thematic,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Taxonomic => "taxonomic",
            Dimension::Thematic => "thematic",
        })
    }
}

impl FromStr for Dimension {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taxonomic" => Ok(Dimension::Taxonomic),
            "thematic" => Ok(Dimension::Thematic),
            _ => Err(Error::InvalidInput(format!("unknown dimension {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseStatus {
    Preserved,
    Weak,
    Lost,
}

impl SenseStatus {
    /// d > 2 preserved, 1 < d ≤ 2 weak, anything else (including d = 1) lost.
    pub fn from_d(d: f64) -> Self {
        if d > 2.0 {
            SenseStatus::Preserved
        } else if d > 1.0 {
            SenseStatus::Weak
        } else {
            SenseStatus::Lost
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCluster {
    pub word: String,
    pub cluster: String,
    pub dimension: Dimension,
    pub members: Vec<String>,
}

/// Reads `word<TAB>cluster<TAB>dimension<TAB>m1,m2,...` lines.
pub fn load_probes(path: &Path) -> Result<Vec<ProbeCluster>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, i + 1, "expected 4 tab-separated fields"));
        }
        let members: Vec<String> = fields[3]
            .split(',')
            .map(|m| m.trim().to_lowercase())
            .filter(|m| !m.is_empty())
            .collect();
        if members.len() < 2 {
            return Err(Error::parse(path, i + 1, "cluster needs at least two members"));
        }
        out.push(ProbeCluster {
            word: fields[0].trim().to_lowercase(),
            cluster: fields[1].trim().to_string(),
            dimension: fields[2].trim().parse().map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?,
            members,
        });
    }
    Ok(out)
}

pub fn write_probes(path: &Path, probes: &[ProbeCluster]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    for p in probes {
        writeln!(f, "{}\t{}\t{}\t{}", p.word, p.cluster, p.dimension, p.members.join(",")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Builds probe clusters from WordNet: words with at least three noun
/// synsets spread over at least two noun lexicographer categories. Each
/// category is one sense cluster whose taxonomic members are the synonyms,
/// hypernyms and parts of that category's synsets. With `edges`, a thematic
/// cluster collects the ConceptNet neighbours of the taxonomic members.
/// `keep` restricts member words (e.g. to the scorer's vocabulary).
pub fn build_probes(
    g: &SynsetGraph,
    edges: Option<&ConceptEdges>,
    keep: impl Fn(&str) -> bool,
    max_words: usize,
    seed: u64,
) -> Vec<ProbeCluster> {
    let mut neighbors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    if let Some(edges) = edges {
        for (_, h, t, _) in edges.iter() {
            neighbors.entry(h).or_default().insert(t);
            neighbors.entry(t).or_default().insert(h);
        }
    }
    let mut candidates: Vec<&str> = g
        .lemmas()
        .into_iter()
        .filter(|w| is_plain_word(w) && keep(w))
        .filter(|w| {
            let nouns: Vec<usize> = g
                .synsets_of(w)
                .iter()
                .copied()
                .filter(|&n| g.synset(n).pos() == Pos::Noun)
                .collect();
            let cats: BTreeSet<&str> = nouns.iter().map(|&n| g.synset(n).lexname).collect();
            nouns.len() >= 3 && cats.len() >= 2
        })
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut out = Vec::new();
    let mut words = 0;
    for word in candidates {
        if words == max_words {
            break;
        }
        let mut by_cat: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for &n in g.synsets_of(word) {
            let s = g.synset(n);
            if s.pos() != Pos::Noun {
                continue;
            }
            let members = by_cat.entry(s.lexname).or_default();
            let related = std::iter::once(n).chain(s.hypernyms.iter().copied()).chain(s.meronyms.iter().copied());
            for m in related {
                for l in &g.synset(m).lemmas {
                    if l != word && is_plain_word(l) && keep(l) {
                        members.insert(l.clone());
                    }
                }
            }
        }
        // every sense cluster name must be specific to one sense
        let mut claimed: BTreeMap<&String, usize> = BTreeMap::new();
        for m in by_cat.values().flatten() {
            *claimed.entry(m).or_insert(0) += 1;
        }
        let mut word_clusters = Vec::new();
        for (cat, members) in &by_cat {
            let tax: Vec<String> = members.iter().filter(|m| claimed[m] == 1).cloned().collect();
            if tax.len() < 2 {
                continue;
            }
            if edges.is_some() {
                let mut thematic: BTreeSet<String> = BTreeSet::new();
                for m in &tax {
                    for &nb in neighbors.get(m.as_str()).into_iter().flatten() {
                        if nb != word && !tax.contains(&nb.to_string()) && is_plain_word(nb) && keep(nb) {
                            thematic.insert(nb.to_string());
                        }
                    }
                }
                if thematic.len() >= 2 {
                    word_clusters.push(ProbeCluster {
                        word: word.to_string(),
                        cluster: cat.to_string(),
                        dimension: Dimension::Thematic,
                        members: thematic.into_iter().collect(),
                    });
                }
            }
            word_clusters.push(ProbeCluster {
                word: word.to_string(),
                cluster: cat.to_string(),
                dimension: Dimension::Taxonomic,
                members: tax,
            });
        }
        let tax_clusters = word_clusters.iter().filter(|c| c.dimension == Dimension::Taxonomic).count();
        if tax_clusters >= 2 {
            word_clusters.sort_by(|a, b| (a.dimension, &a.cluster).cmp(&(b.dimension, &b.cluster)));
            out.extend(word_clusters);
            words += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolysemyConfig {
    /// Random words drawn from the baseline pool for each probe word.
    pub baseline_size: usize,
    pub seed: u64,
}

impl Default for PolysemyConfig {
    fn default() -> Self {
        Self {
            baseline_size: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub word: String,
    pub cluster: String,
    pub dimension: Dimension,
    pub members_scored: usize,
    pub cluster_mean: f64,
    pub baseline_mean: f64,
    pub cohen_d: f64,
    pub status: SenseStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub clusters: usize,
    pub preserved: usize,
    pub weak: usize,
    pub lost: usize,
    pub mean_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolysemyReport {
    pub clusters: Vec<ClusterResult>,
    /// Clusters left out because fewer than two members could be scored.
    pub skipped: usize,
    pub summary: BTreeMap<Dimension, DimensionSummary>,
}

impl PolysemyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,cluster,dimension,members,cluster_mean,baseline_mean,cohen_d,status\n");
        for c in &self.clusters {
            s.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{}\n",
                c.word,
                c.cluster,
                c.dimension,
                c.members_scored,
                c.cluster_mean,
                c.baseline_mean,
                c.cohen_d,
                serde_json::to_value(c.status).unwrap().as_str().unwrap()
            ));
        }
        s
    }
}

/// For each probe cluster, compares the scorer's (word, member) scores on
/// the cluster's dimension with (word, random word) scores via Cohen's d.
pub fn polysemy_test(
    scorer: &dyn PairScorer,
    probes: &[ProbeCluster],
    baseline_pool: &[String],
    cfg: &PolysemyConfig,
) -> Result<PolysemyReport> {
    if cfg.baseline_size < 2 {
        return Err(Error::InvalidInput("baseline_size must be at least 2".into()));
    }
    if baseline_pool.len() < cfg.baseline_size {
        return Err(Error::InvalidInput(format!(
            "baseline pool has {} words, {} needed",
            baseline_pool.len(),
            cfg.baseline_size
        )));
    }
    if let Some(p) = probes.iter().find(|p| p.members.len() < 2) {
        return Err(Error::InvalidInput(format!("cluster {}/{} has fewer than two members", p.word, p.cluster)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut baselines: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let words: BTreeSet<&str> = probes.iter().map(|p| p.word.as_str()).collect();
    for word in words {
        let excluded: BTreeSet<&str> = probes
            .iter()
            .filter(|p| p.word == word)
            .flat_map(|p| p.members.iter().map(String::as_str))
            .chain([word])
            .collect();
        let pool: Vec<&String> = baseline_pool.iter().filter(|w| !excluded.contains(w.as_str())).collect();
        let take = cfg.baseline_size.min(pool.len());
        let pairs: Vec<(String, String)> = sample(&mut rng, pool.len(), take)
            .into_iter()
            .map(|i| (word.to_string(), pool[i].clone()))
            .collect();
        let scores: Vec<(f64, f64)> = scorer.score_batch(&pairs)?.into_iter().flatten().collect();
        baselines.insert(word, scores);
    }

    let mut clusters = Vec::new();
    let mut skipped = 0;
    for p in probes {
        let pairs: Vec<(String, String)> = p.members.iter().map(|m| (p.word.clone(), m.clone())).collect();
        let pick = |s: &(f64, f64)| match p.dimension {
            Dimension::Taxonomic => s.0,
            Dimension::Thematic => s.1,
        };
        let member: Vec<f64> = scorer.score_batch(&pairs)?.iter().flatten().map(pick).collect();
        let base: Vec<f64> = baselines[p.word.as_str()].iter().map(pick).collect();
        if member.len() < 2 || base.len() < 2 {
            skipped += 1;
            continue;
        }
        let d = match cohens_d(&member, &base) {
            Ok(d) => d,
            Err(Error::Undefined(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        clusters.push(ClusterResult {
            word: p.word.clone(),
            cluster: p.cluster.clone(),
            dimension: p.dimension,
            members_scored: member.len(),
            cluster_mean: mean(&member),
            baseline_mean: mean(&base),
            cohen_d: d,
            status: SenseStatus::from_d(d),
        });
    }
    let mut summary: BTreeMap<Dimension, DimensionSummary> = BTreeMap::new();
    for c in &clusters {
        let s = summary.entry(c.dimension).or_default();
        s.clusters += 1;
        s.mean_d += c.cohen_d;
        match c.status {
            SenseStatus::Preserved => s.preserved += 1,
            SenseStatus::Weak => s.weak += 1,
            SenseStatus::Lost => s.lost += 1,
        }
    }
    for s in summary.values_mut() {
        s.mean_d /= s.clusters as f64;
    }
    Ok(PolysemyReport {
        clusters,
        skipped,
        summary,
    })
}
