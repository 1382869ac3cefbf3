//! Downstream tasks over topic-model document embeddings and the
//! single-factor regressions that relate atlas scores to task results.
//!
//! * Task A: category centroids from training documents, Hit@3 / Recall@3 on
//!   test documents.
//! * Task B: same-category rate among each document's nearest neighbours.
//! * Task C: Jaccard overlap of the top documents retrieved for the two
//!   words of a synonym pair via `P(w|d)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::canonical;
use crate::stats::{mean, t_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMatrix {
    pub corpus: String,
    pub model: String,
    pub doc_ids: Vec<String>,
    pub split: Vec<Split>,
    /// documents × topics, non-negative
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    /// One row of weights per document, comma-separated.
    #[default]
    Dense,
    /// `doc_index,topic,weight` lines; absent cells are zero.
    Triplet,
}

/// The JSON file that accompanies a document–topic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocTopicSidecar {
    pub corpus: String,
    pub model: String,
    pub doc_ids: Vec<String>,
    /// One tag per document; all `train` when absent.
    #[serde(default)]
    pub split: Option<Vec<Split>>,
    #[serde(default)]
    pub format: MatrixFormat,
    /// Required for the triplet format.
    #[serde(default)]
    pub topics: Option<usize>,
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(path, line, format!("not a finite number: {s:?}")))
}

fn is_header(line: &str) -> bool {
    line.split(',').next().is_some_and(|c| c.trim().parse::<f64>().is_err())
}

impl DocTopicMatrix {
    pub fn new(corpus: &str, model: &str, doc_ids: Vec<String>, split: Vec<Split>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if doc_ids.len() != rows.len() || split.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows, {} doc ids, {} split tags",
                rows.len(),
                doc_ids.len(),
                split.len()
            )));
        }
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidInput("document-topic matrix is empty".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: r.len() });
            }
            if r.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput(format!("row {} ({}) has a negative or non-finite weight", i, doc_ids[i])));
            }
        }
        let unique: BTreeSet<&String> = doc_ids.iter().collect();
        if unique.len() != doc_ids.len() {
            return Err(Error::InvalidInput("duplicate document ids".into()));
        }
        Ok(Self {
            corpus: corpus.into(),
            model: model.into(),
            doc_ids,
            split,
            rows,
        })
    }

    pub fn topics(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows rescaled to sum to 1; all-zero rows stay zero.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                if s > 0.0 {
                    r.iter().map(|x| x / s).collect()
                } else {
                    r.clone()
                }
            })
            .collect()
    }

    /// Reads a dense or triplet matrix plus its JSON sidecar.
    pub fn load(matrix: &Path, sidecar: &Path) -> Result<Self> {
        let meta: DocTopicSidecar =
            serde_json::from_str(&fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?)?;
        let text = fs::read_to_string(matrix).map_err(|e| Error::io(matrix, e))?;
        let n = meta.doc_ids.len();
        let rows = match meta.format {
            MatrixFormat::Dense => {
                let mut rows = Vec::with_capacity(n);
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() || (i == 0 && is_header(line)) {
                        continue;
                    }
                    rows.push(line.split(',').map(|c| parse_f64(c, matrix, i + 1)).collect::<Result<Vec<_>>>()?);
                }
                rows
            }
            MatrixFormat::Triplet => {
                let k = meta
                    .topics
                    .ok_or_else(|| Error::InvalidInput("triplet matrices need `topics` in the sidecar".into()))?;
                let mut rows = vec![vec![0.0; k]; n];
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() || (i == 0 && is_header(line)) {
                        continue;
                    }
                    let f: Vec<&str> = line.split(',').collect();
                    if f.len() != 3 {
                        return Err(Error::parse(matrix, i + 1, "expected doc_index,topic,weight"));
                    }
                    let d: usize = f[0].trim().parse().map_err(|_| Error::parse(matrix, i + 1, "bad doc index"))?;
                    let t: usize = f[1].trim().parse().map_err(|_| Error::parse(matrix, i + 1, "bad topic index"))?;
                    if d >= n || t >= k {
                        return Err(Error::parse(matrix, i + 1, "index out of range"));
                    }
                    rows[d][t] = parse_f64(f[2], matrix, i + 1)?;
                }
                rows
            }
        };
        let split = meta.split.unwrap_or_else(|| vec![Split::Train; n]);
        Self::new(&meta.corpus, &meta.model, meta.doc_ids, split, rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicWordMatrix {
    pub vocabulary: Vec<String>,
    /// topics × vocabulary, each row a distribution
    pub rows: Vec<Vec<f64>>,
}

impl TopicWordMatrix {
    pub fn new(vocabulary: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("topic-word matrix has no topics".into()));
        }
        for (t, r) in rows.iter().enumerate() {
            if r.len() != vocabulary.len() {
                return Err(Error::DimensionMismatch {
                    expected: vocabulary.len(),
                    got: r.len(),
                });
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-6 || r.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidInput(format!("topic {t} is not a distribution (sum {s})")));
            }
        }
        Ok(Self { vocabulary, rows })
    }

    /// Dense CSV whose first line is the vocabulary.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let vocabulary: Vec<String> = header.split(',').map(|w| w.trim().to_lowercase()).collect();
        let rows = lines
            .map(|(i, l)| l.split(',').map(|c| parse_f64(c, path, i + 1)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(vocabulary, rows)
    }

    pub fn column(&self, word: &str) -> Option<Vec<f64>> {
        let j = self.vocabulary.iter().position(|w| w == word)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Document id → labels.
pub type LabelSet = BTreeMap<String, BTreeSet<String>>;

/// `doc_id<TAB>label1,label2` lines.
pub fn load_labels(path: &Path) -> Result<LabelSet> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = LabelSet::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (doc, labels) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected doc_id<TAB>labels"))?;
        let set: BTreeSet<String> = labels.split(',').map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
        if set.is_empty() {
            return Err(Error::parse(path, i + 1, "document has no labels"));
        }
        out.entry(doc.trim().to_string()).or_default().extend(set);
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine with the convention that a zero vector is orthogonal to everything.
fn cosine(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

fn labels_of<'a>(labels: &'a LabelSet, doc: &str) -> Result<&'a BTreeSet<String>> {
    labels
        .get(doc)
        .ok_or_else(|| Error::InvalidInput(format!("document {doc} has no labels")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAResult {
    pub hit3: f64,
    pub recall3: f64,
    pub test_docs: usize,
    pub categories: usize,
    /// Categories seen on test documents but on no training document.
    pub excluded_categories: Vec<String>,
}

type Centroid<'a> = (&'a str, Vec<f64>, f64);

/// Mean raw topic vector of each category's training documents.
fn centroids<'a>(m: &DocTopicMatrix, labels: &'a LabelSet) -> Result<Vec<Centroid<'a>>> {
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for i in (0..m.len()).filter(|&i| m.split[i] == Split::Train) {
        for l in labels_of(labels, &m.doc_ids[i])? {
            let e = sums.entry(l.as_str()).or_insert_with(|| (vec![0.0; m.topics()], 0));
            for (s, x) in e.0.iter_mut().zip(&m.rows[i]) {
                *s += x;
            }
            e.1 += 1;
        }
    }
    if sums.is_empty() {
        return Err(Error::InvalidInput("no labelled training documents".into()));
    }
    Ok(sums
        .into_iter()
        .map(|(l, (s, n))| {
            let c: Vec<f64> = s.iter().map(|x| x / n as f64).collect();
            let nc = norm(&c);
            (l, c, nc)
        })
        .collect())
}

fn rank<'a>(v: &[f64], centroids: &[Centroid<'a>]) -> Vec<&'a str> {
    let nv = norm(v);
    let mut ranked: Vec<(f64, &str)> = centroids.iter().map(|(l, c, nc)| (cosine(v, nv, c, *nc), *l)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    ranked.into_iter().map(|(_, l)| l).collect()
}

/// Every test document's categories, best first.
pub fn category_ranking(m: &DocTopicMatrix, labels: &LabelSet) -> Result<BTreeMap<String, Vec<String>>> {
    let cs = centroids(m, labels)?;
    Ok((0..m.len())
        .filter(|&i| m.split[i] == Split::Test)
        .map(|i| (m.doc_ids[i].clone(), rank(&m.rows[i], &cs).into_iter().map(String::from).collect()))
        .collect())
}

/// Centroid classification: each category's centroid is the mean of the
/// raw topic vectors of its training documents; test documents rank the
/// centroids by cosine (ties by category name).
pub fn task_a(m: &DocTopicMatrix, labels: &LabelSet) -> Result<TaskAResult> {
    let cs = centroids(m, labels)?;
    let known: BTreeSet<&str> = cs.iter().map(|c| c.0).collect();
    let mut excluded = BTreeSet::new();
    let (mut hits, mut recall, mut n) = (0.0, 0.0, 0usize);
    for i in (0..m.len()).filter(|&i| m.split[i] == Split::Test) {
        let truth = labels_of(labels, &m.doc_ids[i])?;
        for l in truth.iter().filter(|l| !known.contains(l.as_str())) {
            excluded.insert(l.clone());
        }
        let found = rank(&m.rows[i], &cs).into_iter().take(3).filter(|l| truth.contains(*l)).count();
        hits += (found > 0) as u8 as f64;
        recall += found as f64 / truth.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidInput("no test documents".into()));
    }
    if !excluded.is_empty() {
        log::warn!("{} test categories have no training documents", excluded.len());
    }
    Ok(TaskAResult {
        hit3: hits / n as f64,
        recall3: recall / n as f64,
        test_docs: n,
        categories: cs.len(),
        excluded_categories: excluded.into_iter().collect(),
    })
}

/// Same-category rate: for every document, the share of its `k_nn`
/// cosine-nearest other documents (ties by index) that share a label.
pub fn task_b(m: &DocTopicMatrix, labels: &LabelSet, k_nn: usize, workers: usize) -> Result<f64> {
    let n = m.len();
    if k_nn == 0 || n < k_nn + 1 {
        return Err(Error::InvalidInput(format!("{n} documents are too few for {k_nn} neighbours")));
    }
    let docs: Vec<&BTreeSet<String>> = m.doc_ids.iter().map(|d| labels_of(labels, d)).collect::<Result<_>>()?;
    let norms: Vec<f64> = m.rows.iter().map(|r| norm(r)).collect();
    let rate = |q: usize| -> f64 {
        let mut sims: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != q)
            .map(|j| (cosine(&m.rows[q], norms[q], &m.rows[j], norms[j]), j))
            .collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let shared = sims[..k_nn].iter().filter(|(_, j)| !docs[q].is_disjoint(docs[*j])).count();
        shared as f64 / k_nn as f64
    };
    let workers = workers.max(1);
    let chunk = n.div_ceil(workers);
    let rates: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .collect::<Vec<_>>()
            .chunks(chunk)
            .map(|qs| {
                let qs = qs.to_vec();
                let rate = &rate;
                s.spawn(move || qs.into_iter().map(rate).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("task B worker panicked")).collect()
    });
    Ok(mean(&rates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCResult {
    pub mean_jaccard: f64,
    pub pairs_scored: usize,
    pub per_pair: Vec<(String, String, f64)>,
    /// Pairs with a word missing from the topic-word vocabulary.
    pub skipped: Vec<(String, String)>,
}

/// Top-`top_k` documents by `P(w|d) = Σ_t P(w|t) P̂(t|d)`, ties by doc id.
pub fn top_documents(tw: &TopicWordMatrix, theta: &[Vec<f64>], doc_ids: &[String], word: &str, top_k: usize) -> Option<Vec<usize>> {
    let col = tw.column(word)?;
    let mut scored: Vec<(f64, usize)> = theta
        .iter()
        .enumerate()
        .map(|(d, row)| (row.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>(), d))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| doc_ids[a.1].cmp(&doc_ids[b.1])));
    Some(scored.into_iter().take(top_k).map(|(_, d)| d).collect())
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Mean Jaccard overlap between the top documents of the two words of each
/// synonym pair.
pub fn task_c(tw: &TopicWordMatrix, dt: &DocTopicMatrix, pairs: &[(String, String)], top_k: usize) -> Result<TaskCResult> {
    if tw.rows.len() != dt.topics() {
        return Err(Error::DimensionMismatch {
            expected: tw.rows.len(),
            got: dt.topics(),
        });
    }
    if top_k == 0 {
        return Err(Error::InvalidInput("top_k must be positive".into()));
    }
    let theta = dt.normalized_rows();
    let mut per_pair = Vec::new();
    let mut skipped = Vec::new();
    for (a, b) in pairs {
        match (
            top_documents(tw, &theta, &dt.doc_ids, a, top_k),
            top_documents(tw, &theta, &dt.doc_ids, b, top_k),
        ) {
            (Some(x), Some(y)) => per_pair.push((a.clone(), b.clone(), jaccard(&x, &y))),
            _ => skipped.push((a.clone(), b.clone())),
        }
    }
    if per_pair.is_empty() {
        return Err(Error::InvalidInput("every synonym pair has an out-of-vocabulary word".into()));
    }
    Ok(TaskCResult {
        mean_jaccard: per_pair.iter().map(|p| p.2).sum::<f64>() / per_pair.len() as f64,
        pairs_scored: per_pair.len(),
        per_pair,
        skipped,
    })
}

/// Default synonym pairs: three reference examples followed by 47 pairs
/// curated for this toolkit.
pub const DEFAULT_SYNONYMS: &str = include_str!("../assets/synonym_pairs.tsv");

fn parse_synonyms(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 2 || f.iter().any(|w| w.is_empty()) || f[0].eq_ignore_ascii_case(f[1]) {
            return Err(Error::parse(path, i + 1, "expected two different words separated by a tab"));
        }
        let (a, b) = (f[0].to_lowercase(), f[1].to_lowercase());
        if seen.insert(canonical(&a, &b)) {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// `w1<TAB>w2` lines, deduplicated irrespective of order.
pub fn load_synonym_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    parse_synonyms(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?, path)
}

pub fn default_synonym_pairs() -> Vec<(String, String)> {
    parse_synonyms(DEFAULT_SYNONYMS, Path::new("<builtin synonym pairs>")).expect("valid builtin synonym file")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub predictor: String,
    pub slope: f64,
    /// One intercept, or one per group for fixed effects (in group order).
    pub intercepts: Vec<f64>,
    pub groups: Vec<String>,
    pub r2: f64,
    pub t: f64,
    pub p: f64,
    pub n: usize,
    pub df: usize,
}

/// Exact fits give an infinite t; p is then reported as the smallest
/// positive double so it stays in (0, 1].
fn slope_test(slope: f64, sse: f64, sxx: f64, df: usize) -> (f64, f64) {
    let se = (sse / df as f64 / sxx).sqrt();
    let t = if se > 0.0 { slope / se } else { f64::INFINITY.copysign(slope) };
    (t, t_two_sided_p(t, df as f64).max(f64::MIN_POSITIVE))
}

fn check_xy(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("regression data must be finite".into()));
    }
    Ok(())
}

/// Ordinary least squares of `y` on `x` with an intercept.
pub fn ols_single(predictor: &str, x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    check_xy(x, y)?;
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("OLS needs at least 3 points, got {n}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(format!("predictor {predictor} is constant")));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let (t, p) = slope_test(slope, sse, sxx, n - 2);
    Ok(RegressionResult {
        predictor: predictor.into(),
        slope,
        intercepts: vec![intercept],
        groups: vec![],
        r2,
        t,
        p,
        n,
        df: n - 2,
    })
}

/// One shared slope with a separate intercept per group, computed through
/// within-group demeaning (which gives the same slope and residuals as the
/// full dummy-variable least squares).
pub fn ols_fixed_effects(predictor: &str, x: &[f64], y: &[f64], group: &[String]) -> Result<RegressionResult> {
    check_xy(x, y)?;
    if group.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: group.len(),
        });
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in group.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    let g = members.len();
    let n = x.len();
    if g < 2 {
        return Err(Error::InvalidInput("fixed effects need at least 2 groups".into()));
    }
    if n < g + 2 {
        return Err(Error::InvalidInput(format!("{n} points leave no residual degrees of freedom for {g} groups")));
    }
    let mut xm = vec![0.0; n];
    let mut ym = vec![0.0; n];
    let mut centres = Vec::with_capacity(g);
    for idx in members.values() {
        let gx = idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64;
        let gy = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        for &i in idx {
            xm[i] = x[i] - gx;
            ym[i] = y[i] - gy;
        }
        centres.push((gx, gy));
    }
    let sxx: f64 = xm.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(format!(
            "rank deficient: {predictor} does not vary within any group"
        )));
    }
    let slope = xm.iter().zip(&ym).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let sse: f64 = xm.iter().zip(&ym).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    let df = n - g - 1;
    let (t, p) = slope_test(slope, sse, sxx, df);
    Ok(RegressionResult {
        predictor: predictor.into(),
        slope,
        intercepts: centres.iter().map(|(gx, gy)| gy - slope * gx).collect(),
        groups: members.keys().map(|s| s.to_string()).collect(),
        r2,
        t,
        p,
        n,
        df,
    })
}

/// A CSV of model-level rows: text columns (`model`, `corpus`, ...) and
/// numeric columns for predictors and task outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTable {
    pub columns: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl RegressionTable {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut cells = Vec::new();
        for (i, l) in lines {
            let row: Vec<String> = l.split(',').map(|c| c.trim().to_string()).collect();
            if row.len() != columns.len() {
                return Err(Error::parse(path, i + 1, format!("expected {} columns", columns.len())));
            }
            cells.push(row);
        }
        Ok(Self { columns, cells })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named {name}")))
    }

    pub fn text(&self, name: &str) -> Result<Vec<String>> {
        let j = self.index(name)?;
        Ok(self.cells.iter().map(|r| r[j].clone()).collect())
    }

    /// Numeric column; empty or `NA` cells are `None`.
    pub fn numeric(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self.index(name)?;
        self.cells
            .iter()
            .map(|r| match r[j].as_str() {
                "" | "NA" | "na" => Ok(None),
                s => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::InvalidInput(format!("column {name}: not a number {s:?}"))),
            })
            .collect()
    }
}

/// Single-factor regression of `outcome` on `predictor`, optionally with
/// fixed effects for the text column `group`. Rows missing either value are
/// left out.
pub fn regress(table: &RegressionTable, predictor: &str, outcome: &str, group: Option<&str>) -> Result<RegressionResult> {
    let x = table.numeric(predictor)?;
    let y = table.numeric(outcome)?;
    let g = match group {
        Some(name) => Some(table.text(name)?),
        None => None,
    };
    let keep: Vec<usize> = (0..x.len()).filter(|&i| x[i].is_some() && y[i].is_some()).collect();
    let xs: Vec<f64> = keep.iter().map(|&i| x[i].unwrap()).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| y[i].unwrap()).collect();
    match g {
        Some(g) => {
            let gs: Vec<String> = keep.iter().map(|&i| g[i].clone()).collect();
            ols_fixed_effects(predictor, &xs, &ys, &gs)
        }
        None => ols_single(predictor, &xs, &ys),
    }
}
