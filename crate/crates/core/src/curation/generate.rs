use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_plain_word, CurationConfig, CurationReport, StageCount};
use crate::embed::{nearest_neighbors_within, EmbeddingTable, FrequencyTable};
use crate::error::{Error, Result};
use crate::lexnet::{ConceptEdges, Relation, SynsetGraph};
use crate::pairs::{canonical, CandidatePair, Source};

type WordPair = (String, String);

struct Ctx<'a> {
    vocab: &'a BTreeSet<String>,
    graph: &'a SynsetGraph,
    edges: &'a ConceptEdges,
    table: &'a EmbeddingTable,
    freq: &'a FrequencyTable,
    cfg: &'a CurationConfig,
}

fn rng_for(cfg: &CurationConfig, source: Source) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(source as u64 + 1);
    rng
}

/// Draws `n` items from an ordered pool without replacement.
fn draw(pool: BTreeSet<WordPair>, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
    let mut v: Vec<WordPair> = pool.into_iter().collect();
    v.shuffle(rng);
    v.truncate(n);
    v
}

fn insert(pool: &mut BTreeSet<WordPair>, a: &str, b: &str) {
    if a != b {
        pool.insert(canonical(a, b));
    }
}

impl Ctx<'_> {
    fn in_vocab<'s>(&self, lemmas: &'s [String]) -> Vec<&'s str> {
        lemmas
            .iter()
            .map(String::as_str)
            .filter(|w| self.vocab.contains(*w))
            .collect()
    }

    fn synonyms(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        let mut pool = BTreeSet::new();
        for s in self.graph.synsets() {
            let ls = self.in_vocab(&s.lemmas);
            for (i, a) in ls.iter().enumerate() {
                for b in &ls[i + 1..] {
                    insert(&mut pool, a, b);
                }
            }
        }
        draw(pool, n, rng)
    }

    fn cohyponyms(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (node, s) in self.graph.synsets().iter().enumerate() {
            for &h in &s.hypernyms {
                children.entry(h).or_default().push(node);
            }
        }
        let cap = self.cfg.max_pairs_per_parent;
        let mut pool = BTreeSet::new();
        for kids in children.values() {
            // (child index, word) for every in-vocabulary lemma of every child
            let members: Vec<(usize, &str)> = kids
                .iter()
                .enumerate()
                .flat_map(|(ci, &k)| self.in_vocab(&self.graph.synset(k).lemmas).into_iter().map(move |w| (ci, w)))
                .collect();
            let mut local = Vec::new();
            for (i, &(ca, a)) in members.iter().enumerate() {
                for &(cb, b) in &members[i + 1..] {
                    if ca != cb && a != b {
                        local.push(canonical(a, b));
                    }
                }
            }
            local.sort();
            local.dedup();
            if local.len() > cap {
                let mut keep = sample(rng, local.len(), cap).into_vec();
                keep.sort_unstable();
                pool.extend(keep.into_iter().map(|i| local[i].clone()));
            } else {
                pool.extend(local);
            }
        }
        draw(pool, n, rng)
    }

    fn hypernyms(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        let mut pool = BTreeSet::new();
        for s in self.graph.synsets() {
            let lower = self.in_vocab(&s.lemmas);
            for &h in &s.hypernyms {
                for b in self.in_vocab(&self.graph.synset(h).lemmas) {
                    for a in &lower {
                        insert(&mut pool, a, b);
                    }
                }
            }
        }
        draw(pool, n, rng)
    }

    fn antonyms(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        let mut pool = BTreeSet::new();
        for s in self.graph.synsets() {
            for &(si, target, ti) in &s.antonyms {
                let a = &s.lemmas[si];
                let b = &self.graph.synset(target).lemmas[ti];
                if self.vocab.contains(a) && self.vocab.contains(b) {
                    insert(&mut pool, a, b);
                }
            }
        }
        draw(pool, n, rng)
    }

    fn conceptnet(&self, rel: Relation, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        let mut pool = BTreeSet::new();
        for (head, tail, _) in self.edges.of(rel) {
            if self.vocab.contains(head) && self.vocab.contains(tail) {
                insert(&mut pool, head, tail);
            }
        }
        draw(pool, n, rng)
    }

    fn neighbors(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<WordPair>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut queries: Vec<&str> = self
            .vocab
            .iter()
            .map(String::as_str)
            .filter(|w| self.table.contains(w))
            .collect();
        queries.shuffle(rng);
        let k = self.cfg.neighbors_per_word;
        let query = |w: &str| -> Result<Vec<String>> {
            let nn = match nearest_neighbors_within(w, k, self.table, |c| self.vocab.contains(c)) {
                Ok(nn) => nn,
                Err(Error::ZeroNorm) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            cluster_neighbors(&nn, self.table, self.cfg.cluster_threshold, self.cfg.per_cluster)
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let chunk = 16 * self.cfg.workers;
        for block in queries.chunks(chunk) {
            let results: Vec<Result<Vec<String>>> = if self.cfg.workers > 1 {
                let per = block.len().div_ceil(self.cfg.workers);
                std::thread::scope(|s| {
                    let handles: Vec<_> = block
                        .chunks(per)
                        .map(|part| s.spawn(move || part.iter().map(|w| query(w)).collect::<Vec<_>>()))
                        .collect();
                    handles.into_iter().flat_map(|h| h.join().expect("neighbor worker panicked")).collect()
                })
            } else {
                block.iter().map(|w| query(w)).collect()
            };
            for (w, kept) in block.iter().zip(results) {
                for nb in kept? {
                    let pair = canonical(w, &nb);
                    if seen.insert(pair.clone()) {
                        out.push(pair);
                        if out.len() == n {
                            return Ok(out);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rejection sampling of random word pairs from `words`.
    fn sample_pairs(
        &self,
        words: &[&str],
        n: usize,
        rng: &mut ChaCha8Rng,
        accept: impl Fn(&str, &str) -> bool,
    ) -> Vec<WordPair> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        if words.len() < 2 {
            return out;
        }
        let budget = 200 * n + 1000;
        for _ in 0..budget {
            if out.len() == n {
                break;
            }
            let i = rng.random_range(0..words.len());
            let j = rng.random_range(0..words.len());
            if i == j {
                continue;
            }
            let pair = canonical(words[i], words[j]);
            if seen.contains(&pair) || !accept(&pair.0, &pair.1) {
                continue;
            }
            seen.insert(pair.clone());
            out.push(pair);
        }
        out
    }

    fn negatives(&self, source: Source, n: usize, rng: &mut ChaCha8Rng) -> Vec<WordPair> {
        if n == 0 {
            return Vec::new();
        }
        let all: Vec<&str> = self.vocab.iter().map(String::as_str).collect();
        match source {
            Source::NegCommon => {
                let common: Vec<&str> = all
                    .into_iter()
                    .filter(|w| self.freq.zipf(w) >= self.cfg.common_zipf)
                    .collect();
                self.sample_pairs(&common, n, rng, |_, _| true)
            }
            Source::NegFar => {
                let embedded: Vec<&str> = all.into_iter().filter(|w| self.table.contains(w)).collect();
                self.sample_pairs(&embedded, n, rng, |a, b| {
                    self.table
                        .cosine_words(a, b)
                        .is_ok_and(|c| c < self.cfg.far_threshold)
                })
            }
            Source::NegCrossdomain => self.sample_pairs(&all, n, rng, |a, b| {
                let la = self.graph.lexnames_of(a);
                let lb = self.graph.lexnames_of(b);
                !la.is_empty() && !lb.is_empty() && la.iter().all(|x| !lb.contains(x))
            }),
            Source::NegCrosspos => self.sample_pairs(&all, n, rng, |a, b| {
                matches!(
                    (self.graph.majority_pos(a), self.graph.majority_pos(b)),
                    (Some(pa), Some(pb)) if pa != pb
                )
            }),
            _ => unreachable!("not a negative source"),
        }
    }

    fn generate(&self, source: Source, n: usize) -> Result<Vec<WordPair>> {
        let mut rng = rng_for(self.cfg, source);
        Ok(match source {
            Source::WnSynonym => self.synonyms(n, &mut rng),
            Source::WnCohyponym => self.cohyponyms(n, &mut rng),
            Source::WnHypernym => self.hypernyms(n, &mut rng),
            Source::WnAntonym => self.antonyms(n, &mut rng),
            Source::CnRelatedTo => self.conceptnet(Relation::RelatedTo, n, &mut rng),
            Source::CnAtLocation => self.conceptnet(Relation::AtLocation, n, &mut rng),
            Source::CnPartOf => self.conceptnet(Relation::PartOf, n, &mut rng),
            Source::CnUsedFor => self.conceptnet(Relation::UsedFor, n, &mut rng),
            Source::CnCauses => self.conceptnet(Relation::Causes, n, &mut rng),
            Source::EmbNeighbor => self.neighbors(n, &mut rng)?,
            neg => self.negatives(neg, n, &mut rng),
        })
    }
}

/// Groups ranked neighbors greedily: each neighbor joins the first group
/// whose first member has cosine ≥ `threshold` with it, otherwise opens a new
/// group. Returns the neighbors kept (at most `per_cluster` per group), in rank order.
pub fn cluster_neighbors(
    ranked: &[(String, f64)],
    table: &EmbeddingTable,
    threshold: f64,
    per_cluster: usize,
) -> Result<Vec<String>> {
    let mut leaders: Vec<(&str, usize)> = Vec::new();
    let mut kept = Vec::new();
    for (w, _) in ranked {
        let mut joined = None;
        for (gi, (leader, _)) in leaders.iter().enumerate() {
            if table.cosine_words(leader, w)? >= threshold {
                joined = Some(gi);
                break;
            }
        }
        match joined {
            Some(gi) => {
                if leaders[gi].1 < per_cluster {
                    leaders[gi].1 += 1;
                    kept.push(w.clone());
                }
            }
            None => {
                leaders.push((w, 1));
                kept.push(w.clone());
            }
        }
    }
    Ok(kept)
}

/// Generates up to `quota × oversample` candidates per source. Every source
/// draws from its own seeded stream, so results do not depend on `workers`.
pub fn generate_candidates(
    vocab: &BTreeSet<String>,
    g: &SynsetGraph,
    edges: &ConceptEdges,
    table: &EmbeddingTable,
    freq: &FrequencyTable,
    cfg: &CurationConfig,
) -> Result<(Vec<CandidatePair>, CurationReport)> {
    cfg.validate()?;
    let vocab: BTreeSet<String> = vocab.iter().filter(|w| is_plain_word(w)).cloned().collect();
    let ctx = Ctx {
        vocab: &vocab,
        graph: g,
        edges,
        table,
        freq,
        cfg,
    };
    let requested: Vec<(Source, usize)> = Source::ALL
        .into_iter()
        .map(|s| (s, (cfg.quota(s) as f64 * cfg.oversample).ceil() as usize))
        .collect();
    let results: Vec<Result<Vec<WordPair>>> = if cfg.workers > 1 {
        std::thread::scope(|s| {
            let ctx = &ctx;
            let handles: Vec<_> = requested
                .iter()
                .map(|&(src, n)| s.spawn(move || ctx.generate(src, n)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("generator panicked")).collect()
        })
    } else {
        requested.iter().map(|&(src, n)| ctx.generate(src, n)).collect()
    };
    let mut pairs = Vec::new();
    let mut report = CurationReport {
        vocabulary: vocab.len(),
        ..Default::default()
    };
    for ((source, n), got) in requested.into_iter().zip(results) {
        let got = got?;
        if got.len() < n {
            report.shortfall.insert(source, n - got.len());
        }
        pairs.extend(got.into_iter().map(|(w1, w2)| CandidatePair { w1, w2, source }));
    }
    report.partial = !report.shortfall.is_empty();
    if report.partial {
        log::warn!("candidate generation fell short for {} sources", report.shortfall.len());
    }
    report.stages.push(StageCount::of("generated", &pairs));
    report.set_final(&pairs);
    Ok((pairs, report))
}
