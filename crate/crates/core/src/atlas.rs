//! Topic-model atlas: scores topics on both axes, normalises within each
//! corpus, shifts the gap by a random-word baseline, measures cross-corpus
//! concordance of model rankings and writes plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::PairScorer;
use crate::stats::{average_ranks, chi2_sf, mean, percentile_sorted};

/// Model name given to random-word baseline topics.
pub const BASELINE_MODEL: &str = "random";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRun {
    pub model: String,
    pub corpus: String,
    pub seed: u64,
    #[serde(default)]
    pub plm_augmented: bool,
    pub topics: Vec<Vec<String>>,
}

/// Reads one run per JSONL line. Words are trimmed and lowercased; a
/// repeated (model, corpus, seed) is an error.
pub fn ingest_runs(path: &Path) -> Result<Vec<TopicRun>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut runs = Vec::new();
    let mut seen: BTreeMap<(String, String, u64), usize> = BTreeMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut run: TopicRun = serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if run.model.is_empty() || run.corpus.is_empty() {
            return Err(Error::parse(path, lineno, "model and corpus must be non-empty"));
        }
        if run.topics.is_empty() {
            return Err(Error::parse(path, lineno, "run has no topics"));
        }
        for (t, topic) in run.topics.iter_mut().enumerate() {
            for w in topic.iter_mut() {
                *w = w.trim().to_lowercase();
            }
            if topic.is_empty() || topic.iter().any(String::is_empty) {
                return Err(Error::parse(path, lineno, format!("topic {t} is empty or has an empty word")));
            }
        }
        let key = (run.model.clone(), run.corpus.clone(), run.seed);
        if let Some(prev) = seen.insert(key, lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "duplicate run (model {}, corpus {}, seed {}), first seen on line {prev}",
                    run.model, run.corpus, run.seed
                ),
            ));
        }
        runs.push(run);
    }
    Ok(runs)
}

/// Where a topic came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicKey {
    pub model: String,
    pub corpus: String,
    pub seed: u64,
    pub topic: usize,
    #[serde(default)]
    pub plm_augmented: bool,
    #[serde(default)]
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    #[serde(flatten)]
    pub key: TopicKey,
    /// The topic's first `top_n` words, before OOV removal.
    pub words: Vec<String>,
    pub oov_dropped: Vec<String>,
    pub n_pairs_scored: usize,
    /// `None` when fewer than two words could be scored.
    pub sim_raw: Option<f64>,
    pub rel_raw: Option<f64>,
    #[serde(default)]
    pub sim_norm: Option<f64>,
    #[serde(default)]
    pub rel_norm: Option<f64>,
}

impl TopicScore {
    pub fn is_scored(&self) -> bool {
        self.sim_raw.is_some() && self.rel_raw.is_some()
    }

    /// Normalised relatedness minus normalised similarity.
    pub fn gap_norm(&self) -> Option<f64> {
        Some(self.rel_norm? - self.sim_norm?)
    }
}

/// Survivors of truncation, deduplication and OOV removal, sorted so the
/// result does not depend on word order.
fn topic_plan(scorer: &dyn PairScorer, topic: &[String], top_n: usize) -> (Vec<String>, Vec<String>, Vec<String>) {
    let words: Vec<String> = topic.iter().take(top_n).cloned().collect();
    let mut seen = BTreeSet::new();
    let mut survivors = Vec::new();
    let mut oov = Vec::new();
    for w in &words {
        if !seen.insert(w.clone()) {
            continue;
        }
        if scorer.in_vocab(w) {
            survivors.push(w.clone());
        } else {
            oov.push(w.clone());
        }
    }
    survivors.sort();
    (words, survivors, oov)
}

/// Scores many topics with a single batched call to the scorer.
pub fn score_topics(scorer: &dyn PairScorer, topics: &[&[String]], top_n: usize) -> Result<Vec<TopicScore>> {
    if top_n < 2 {
        return Err(Error::InvalidInput("top_n must be at least 2".into()));
    }
    let plans: Vec<_> = topics.iter().map(|t| topic_plan(scorer, t, top_n)).collect();
    let mut pairs = Vec::new();
    let mut spans = Vec::with_capacity(plans.len());
    for (_, survivors, _) in &plans {
        let start = pairs.len();
        for i in 0..survivors.len() {
            for j in i + 1..survivors.len() {
                pairs.push((survivors[i].clone(), survivors[j].clone()));
            }
        }
        spans.push(start..pairs.len());
    }
    let scores = scorer.score_batch(&pairs)?;
    Ok(plans
        .into_iter()
        .zip(spans)
        .map(|((words, _, oov), span)| {
            let got: Vec<(f64, f64)> = scores[span].iter().flatten().copied().collect();
            let (sim_raw, rel_raw) = if got.is_empty() {
                (None, None)
            } else {
                let n = got.len() as f64;
                (
                    Some(got.iter().map(|s| s.0).sum::<f64>() / n),
                    Some(got.iter().map(|s| s.1).sum::<f64>() / n),
                )
            };
            TopicScore {
                key: TopicKey::default(),
                words,
                oov_dropped: oov,
                n_pairs_scored: got.len(),
                sim_raw,
                rel_raw,
                sim_norm: None,
                rel_norm: None,
            }
        })
        .collect())
}

/// Mean pairwise scores over the topic's first `top_n` distinct in-vocabulary
/// words. The key is left empty.
pub fn score_topic(scorer: &dyn PairScorer, topic: &[String], top_n: usize) -> Result<TopicScore> {
    Ok(score_topics(scorer, &[topic], top_n)?.remove(0))
}

fn score_run(scorer: &dyn PairScorer, run: &TopicRun, top_n: usize) -> Result<Vec<TopicScore>> {
    let topics: Vec<&[String]> = run.topics.iter().map(Vec::as_slice).collect();
    let mut out = score_topics(scorer, &topics, top_n)?;
    for (t, s) in out.iter_mut().enumerate() {
        s.key = TopicKey {
            model: run.model.clone(),
            corpus: run.corpus.clone(),
            seed: run.seed,
            topic: t,
            plm_augmented: run.plm_augmented,
            baseline: false,
        };
    }
    Ok(out)
}

/// Scores every topic of every run; runs are spread over `workers` threads
/// and the output keeps input order.
pub fn score_runs(scorer: &dyn PairScorer, runs: &[TopicRun], top_n: usize, workers: usize) -> Result<Vec<TopicScore>> {
    let workers = workers.max(1);
    if workers == 1 || runs.len() < 2 {
        let mut out = Vec::new();
        for run in runs {
            out.extend(score_run(scorer, run, top_n)?);
        }
        return Ok(out);
    }
    let chunk = runs.len().div_ceil(workers);
    let parts: Vec<Result<Vec<TopicScore>>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for run in part {
                        out.extend(score_run(scorer, run, top_n)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scoring thread panicked")).collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Distinct words drawn uniformly without replacement from `vocab`.
pub fn sample_random_topics(vocab: &[String], n_topics: usize, topic_size: usize, seed: u64, stream: u64) -> Result<Vec<Vec<String>>> {
    let pool: Vec<&String> = vocab.iter().collect::<BTreeSet<_>>().into_iter().collect();
    if topic_size < 2 || pool.len() < topic_size {
        return Err(Error::InvalidInput(format!(
            "insufficient vocabulary: {} words for random topics of size {topic_size}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok((0..n_topics)
        .map(|_| sample(&mut rng, pool.len(), topic_size).into_iter().map(|i| pool[i].clone()).collect())
        .collect())
}

/// Scored random-word topics for one corpus, drawn from the in-vocabulary
/// part of `vocab`. They must be normalised together with the corpus's
/// real topics (see [`normalize`]) before [`baseline_of`] reads them.
pub fn random_baseline(
    scorer: &dyn PairScorer,
    corpus: &str,
    vocab: &[String],
    n_topics: usize,
    topic_size: usize,
    seed: u64,
) -> Result<Vec<TopicScore>> {
    let usable: Vec<String> = vocab.iter().filter(|w| scorer.in_vocab(w)).cloned().collect();
    let stream = crc32fast::hash(corpus.as_bytes()) as u64;
    let topics = sample_random_topics(&usable, n_topics, topic_size, seed, stream)?;
    let refs: Vec<&[String]> = topics.iter().map(Vec::as_slice).collect();
    let mut out = score_topics(scorer, &refs, topic_size)?;
    for (t, s) in out.iter_mut().enumerate() {
        s.key = TopicKey {
            model: BASELINE_MODEL.into(),
            corpus: corpus.into(),
            seed,
            topic: t,
            plm_augmented: false,
            baseline: true,
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub corpus: String,
    pub scored: usize,
    pub unscored: usize,
    pub sim_range: [f64; 2],
    pub rel_range: [f64; 2],
    /// Axes on which every topic had the same raw score; those map to 0.5.
    pub constant: Vec<String>,
}

fn min_max(xs: impl Iterator<Item = f64>) -> [f64; 2] {
    xs.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], x| [lo.min(x), hi.max(x)])
}

fn rescale(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Min–max normalises raw scores within each corpus, over every scored
/// topic of that corpus (baseline topics included), per axis.
pub fn normalize(scores: &mut [TopicScore]) -> Result<Vec<NormalizationReport>> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        groups.entry(s.key.corpus.clone()).or_default().push(i);
    }
    let mut reports = Vec::new();
    for (corpus, idx) in groups {
        let scored: Vec<usize> = idx.iter().copied().filter(|&i| scores[i].is_scored()).collect();
        if scored.is_empty() {
            return Err(Error::InvalidInput(format!("corpus {corpus} has no scored topics")));
        }
        let sim_range = min_max(scored.iter().map(|&i| scores[i].sim_raw.unwrap()));
        let rel_range = min_max(scored.iter().map(|&i| scores[i].rel_raw.unwrap()));
        for &i in &idx {
            let s = &mut scores[i];
            s.sim_norm = s.sim_raw.map(|x| rescale(x, sim_range));
            s.rel_norm = s.rel_raw.map(|x| rescale(x, rel_range));
        }
        let mut constant = Vec::new();
        if sim_range[0] == sim_range[1] {
            constant.push("similarity".into());
        }
        if rel_range[0] == rel_range[1] {
            constant.push("relatedness".into());
        }
        if !constant.is_empty() {
            log::warn!("corpus {corpus}: constant raw scores on {}", constant.join(", "));
        }
        reports.push(NormalizationReport {
            corpus,
            scored: scored.len(),
            unscored: idx.len() - scored.len(),
            sim_range,
            rel_range,
            constant,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub corpus: String,
    pub topics: usize,
    pub sim_norm_mean: f64,
    pub rel_norm_mean: f64,
    pub gap_mean: f64,
}

/// Mean normalised scores of a corpus's scored baseline topics.
pub fn baseline_of(scores: &[TopicScore], corpus: &str) -> Result<Baseline> {
    let b: Vec<&TopicScore> = scores
        .iter()
        .filter(|s| s.key.baseline && s.key.corpus == corpus && s.is_scored())
        .collect();
    if b.is_empty() {
        return Err(Error::InvalidInput(format!("corpus {corpus} has no scored baseline topics")));
    }
    let norm = |f: fn(&TopicScore) -> Option<f64>| -> Result<Vec<f64>> {
        b.iter()
            .map(|s| f(s).ok_or_else(|| Error::Undefined(format!("baseline topics of {corpus} are not normalised"))))
            .collect()
    };
    let sim = norm(|s| s.sim_norm)?;
    let rel = norm(|s| s.rel_norm)?;
    let gap: Vec<f64> = rel.iter().zip(&sim).map(|(r, s)| r - s).collect();
    Ok(Baseline {
        corpus: corpus.into(),
        topics: b.len(),
        sim_norm_mean: mean(&sim),
        rel_norm_mean: mean(&rel),
        gap_mean: mean(&gap),
    })
}

/// Normalised gap minus the corpus's baseline gap; positive leans toward
/// relatedness.
pub fn shifted_gap(score: &TopicScore, baseline: &Baseline) -> Result<f64> {
    if !score.is_scored() {
        return Err(Error::Undefined(format!(
            "topic {} of {}/{} seed {} is unscored",
            score.key.topic, score.key.model, score.key.corpus, score.key.seed
        )));
    }
    let gap = score
        .gap_norm()
        .ok_or_else(|| Error::Undefined("topic scores are not normalised".into()))?;
    Ok(gap - baseline.gap_mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            min: v[0],
            q1: percentile_sorted(&v, 0.25),
            median: percentile_sorted(&v, 0.5),
            q3: percentile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMean {
    pub seed: u64,
    pub topics: usize,
    pub sim_norm: f64,
    pub rel_norm: f64,
    pub shifted_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub plm_augmented: bool,
    /// Means over all scored topics of all runs.
    pub sim_norm: f64,
    pub rel_norm: f64,
    pub shifted_gap: f64,
    pub topics: usize,
    pub unscored: usize,
    pub runs: Vec<RunMean>,
}

/// Per-corpus model summaries, each corpus's models ordered by mean shifted
/// gap (ascending, ties by model name). Baseline topics are excluded, as are
/// unscored topics and models without a single scored topic.
pub fn summarize(scores: &[TopicScore], baselines: &BTreeMap<String, Baseline>) -> Result<BTreeMap<String, Vec<ModelSummary>>> {
    type RunKey = (String, String, u64);
    let mut by_run: BTreeMap<RunKey, (bool, Vec<[f64; 3]>, usize)> = BTreeMap::new();
    for s in scores.iter().filter(|s| !s.key.baseline) {
        let entry = by_run
            .entry((s.key.corpus.clone(), s.key.model.clone(), s.key.seed))
            .or_insert((s.key.plm_augmented, Vec::new(), 0));
        entry.0 |= s.key.plm_augmented;
        if !s.is_scored() {
            entry.2 += 1;
            continue;
        }
        let base = baselines
            .get(&s.key.corpus)
            .ok_or_else(|| Error::InvalidInput(format!("no baseline for corpus {}", s.key.corpus)))?;
        let gap = shifted_gap(s, base)?;
        entry.1.push([s.sim_norm.unwrap(), s.rel_norm.unwrap(), gap]);
    }
    let mut out: BTreeMap<String, Vec<ModelSummary>> = BTreeMap::new();
    let mut pooled: BTreeMap<(String, String), Vec<[f64; 3]>> = BTreeMap::new();
    for ((corpus, model, seed), (plm, vals, unscored)) in by_run {
        let list = out.entry(corpus.clone()).or_default();
        if list.last().is_none_or(|m| m.model != model) {
            list.push(ModelSummary {
                model: model.clone(),
                plm_augmented: plm,
                sim_norm: 0.0,
                rel_norm: 0.0,
                shifted_gap: 0.0,
                topics: 0,
                unscored: 0,
                runs: Vec::new(),
            });
        }
        let m = list.last_mut().unwrap();
        m.plm_augmented |= plm;
        m.unscored += unscored;
        if vals.is_empty() {
            continue;
        }
        let col = |k: usize| mean(&vals.iter().map(|v| v[k]).collect::<Vec<_>>());
        m.runs.push(RunMean {
            seed,
            topics: vals.len(),
            sim_norm: col(0),
            rel_norm: col(1),
            shifted_gap: col(2),
        });
        m.topics += vals.len();
        pooled.entry((corpus, model)).or_default().extend(vals);
    }
    for (corpus, list) in out.iter_mut() {
        list.retain(|m| m.topics > 0);
        for m in list.iter_mut() {
            let vals = &pooled[&(corpus.clone(), m.model.clone())];
            let col = |k: usize| mean(&vals.iter().map(|v| v[k]).collect::<Vec<_>>());
            m.sim_norm = col(0);
            m.rel_norm = col(1);
            m.shifted_gap = col(2);
        }
        list.sort_by(|a, b| a.shifted_gap.total_cmp(&b.shifted_gap).then_with(|| a.model.cmp(&b.model)));
    }
    out.retain(|_, list| !list.is_empty());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Similarity,
    Relatedness,
    Gap,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Similarity, Axis::Relatedness, Axis::Gap];

    fn value(self, m: &ModelSummary) -> f64 {
        match self {
            Axis::Similarity => m.sim_norm,
            Axis::Relatedness => m.rel_norm,
            Axis::Gap => m.shifted_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallW {
    pub w: f64,
    pub chi2: f64,
    pub df: usize,
    pub p_chi2: f64,
    /// Average ranks, models × corpora.
    pub ranks: Vec<Vec<f64>>,
}

fn w_from_ranks(ranks: &[Vec<f64>], tie_term: f64) -> f64 {
    let m = ranks.len() as f64;
    let c = ranks[0].len() as f64;
    let sums: Vec<f64> = ranks.iter().map(|r| r.iter().sum()).collect();
    let centre = c * (m + 1.0) / 2.0;
    let s: f64 = sums.iter().map(|r| (r - centre).powi(2)).sum();
    12.0 * s / (c * c * (m * m * m - m) - c * tie_term)
}

/// Kendall's coefficient of concordance over `values` (models × corpora):
/// each corpus column is converted to average ranks, with the standard tie
/// correction.
pub fn kendall_w(values: &[Vec<f64>]) -> Result<KendallW> {
    let m = values.len();
    if m < 3 {
        return Err(Error::InvalidInput(format!("concordance needs at least 3 models, got {m}")));
    }
    let c = values[0].len();
    if c < 2 {
        return Err(Error::InvalidInput(format!("concordance needs at least 2 corpora, got {c}")));
    }
    if values.iter().any(|r| r.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: values.iter().map(Vec::len).find(|&l| l != c).unwrap(),
        });
    }
    let mut ranks = vec![vec![0.0; c]; m];
    let mut tie_term = 0.0;
    for j in 0..c {
        let col: Vec<f64> = values.iter().map(|r| r[j]).collect();
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for x in &col {
            *counts.entry(x.to_bits()).or_default() += 1;
        }
        tie_term += counts.values().map(|&t| (t * t * t - t) as f64).sum::<f64>();
        for (i, r) in average_ranks(&col).into_iter().enumerate() {
            ranks[i][j] = r;
        }
    }
    let denom = (c * c) as f64 * ((m * m * m - m) as f64) - c as f64 * tie_term;
    if denom <= 0.0 {
        return Err(Error::Undefined("every corpus ranks all models equal".into()));
    }
    let w = w_from_ranks(&ranks, tie_term).clamp(0.0, 1.0);
    let chi2 = c as f64 * (m - 1) as f64 * w;
    Ok(KendallW {
        w,
        chi2,
        df: m - 1,
        p_chi2: chi2_sf(chi2, (m - 1) as f64),
        ranks,
    })
}

/// Permutation p-value for W: each column's ranks are shuffled
/// independently, and p = (1 + #{W* ≥ W}) / (1 + permutations).
pub fn kendall_w_permutation_p(kw: &KendallW, permutations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, c) = (kw.ranks.len(), kw.ranks[0].len());
    // the tie term only depends on each column's multiset of ranks
    let tie_term: f64 = (0..c)
        .map(|j| {
            let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
            for r in &kw.ranks {
                *counts.entry(r[j].to_bits()).or_default() += 1;
            }
            counts.values().map(|&t| (t * t * t - t) as f64).sum::<f64>()
        })
        .sum();
    let mut cols: Vec<Vec<f64>> = (0..c).map(|j| kw.ranks.iter().map(|r| r[j]).collect()).collect();
    let mut hits = 0usize;
    let mut shuffled = vec![vec![0.0; c]; m];
    for _ in 0..permutations {
        for (j, col) in cols.iter_mut().enumerate() {
            col.shuffle(&mut rng);
            for i in 0..m {
                shuffled[i][j] = col[i];
            }
        }
        if w_from_ranks(&shuffled, tie_term) >= kw.w - 1e-12 {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (1 + permutations) as f64
}

/// Below this many models the χ² approximation is replaced by a
/// permutation test.
pub const CHI2_MIN_MODELS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceResult {
    pub axis: Axis,
    pub models: Vec<String>,
    pub corpora: Vec<String>,
    /// Models missing from at least one corpus, left out of the matrix.
    pub dropped_models: Vec<String>,
    pub w: f64,
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    pub p_method: String,
    pub ranks: Vec<Vec<f64>>,
}

/// Concordance of model rankings across corpora on one axis, using models
/// present in every corpus.
pub fn concordance(summaries: &BTreeMap<String, Vec<ModelSummary>>, axis: Axis, permutations: usize, seed: u64) -> Result<ConcordanceResult> {
    let corpora: Vec<String> = summaries.keys().cloned().collect();
    let all: BTreeSet<&str> = summaries.values().flatten().map(|m| m.model.as_str()).collect();
    let lookup: BTreeMap<(&str, &str), f64> = summaries
        .iter()
        .flat_map(|(c, list)| list.iter().map(move |m| ((c.as_str(), m.model.as_str()), axis.value(m))))
        .collect();
    let (models, dropped): (Vec<&str>, Vec<&str>) = all
        .into_iter()
        .partition(|m| corpora.iter().all(|c| lookup.contains_key(&(c.as_str(), *m))));
    let values: Vec<Vec<f64>> = models
        .iter()
        .map(|m| corpora.iter().map(|c| lookup[&(c.as_str(), *m)]).collect())
        .collect();
    let kw = kendall_w(&values)?;
    let (p, p_method) = if models.len() < CHI2_MIN_MODELS {
        (kendall_w_permutation_p(&kw, permutations, seed), "permutation")
    } else {
        (kw.p_chi2, "chi2")
    };
    Ok(ConcordanceResult {
        axis,
        models: models.into_iter().map(String::from).collect(),
        corpora,
        dropped_models: dropped.into_iter().map(String::from).collect(),
        w: kw.w,
        chi2: kw.chi2,
        df: kw.df,
        p,
        p_method: p_method.into(),
        ranks: kw.ranks,
    })
}

fn file_stem(corpus: &str) -> String {
    corpus
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub const SUMMARY_HEADER: &str = "order,model,plm_augmented,runs,topics,unscored,sim_norm,rel_norm,shifted_gap,\
gap_min,gap_q1,gap_median,gap_q3,gap_max,sim_q1,sim_median,sim_q3,rel_q1,rel_median,rel_q3";
pub const RUNS_HEADER: &str = "model,plm_augmented,seed,topics,sim_norm,rel_norm,shifted_gap";

/// Writes `atlas_<corpus>.csv` (one row per model, in plot order, with
/// quartiles of the per-run means) and `atlas_<corpus>_runs.csv` (one row
/// per run) for every corpus.
pub fn export_atlas(dir: &Path, summaries: &BTreeMap<String, Vec<ModelSummary>>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (corpus, list) in summaries {
        let mut summary = String::from(SUMMARY_HEADER);
        summary.push('\n');
        let mut runs = String::from(RUNS_HEADER);
        runs.push('\n');
        for (order, m) in list.iter().enumerate() {
            let q = |f: fn(&RunMean) -> f64| Quartiles::of(&m.runs.iter().map(f).collect::<Vec<_>>());
            let (g, s, r) = (q(|x| x.shifted_gap), q(|x| x.sim_norm), q(|x| x.rel_norm));
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                order + 1,
                m.model,
                m.plm_augmented,
                m.runs.len(),
                m.topics,
                m.unscored,
                m.sim_norm,
                m.rel_norm,
                m.shifted_gap,
                g.min,
                g.q1,
                g.median,
                g.q3,
                g.max,
                s.q1,
                s.median,
                s.q3,
                r.q1,
                r.median,
                r.q3
            );
            for run in &m.runs {
                let _ = writeln!(
                    runs,
                    "{},{},{},{},{:.6},{:.6},{:.6}",
                    m.model, m.plm_augmented, run.seed, run.topics, run.sim_norm, run.rel_norm, run.shifted_gap
                );
            }
        }
        let stem = file_stem(corpus);
        for (name, body) in [(format!("atlas_{stem}.csv"), summary), (format!("atlas_{stem}_runs.csv"), runs)] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
