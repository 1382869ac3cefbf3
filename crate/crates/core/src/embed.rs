//! Static word-embedding tables, Zipf frequency tables, cosine geometry and
//! exhaustive nearest-neighbour search.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    /// First line is a `count dimension` header.
    Word2vecText,
    /// GloVe style, no header.
    #[default]
    PlainText,
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec-text" => Ok(Self::Word2vecText),
            "plain-text" => Ok(Self::PlainText),
            other => Err(Error::InvalidInput(format!("unknown embedding format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: EmbeddingFormat,
    /// Table name recorded in checkpoints, e.g. `glove-840b-300d`.
    pub name: String,
    /// Lines with non-numeric components tolerated before the load fails.
    pub max_non_numeric: usize,
    /// When set, only these (lowercased) words are kept.
    pub restrict_to: Option<HashSet<String>>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            format: EmbeddingFormat::PlainText,
            name: "embeddings".to_string(),
            max_non_numeric: 100,
            restrict_to: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub skipped_length_mismatch: usize,
    pub skipped_non_numeric: usize,
    pub skipped_duplicate: usize,
    pub skipped_multi_token: usize,
}

impl LoadReport {
    pub fn skipped(&self) -> usize {
        self.skipped_length_mismatch
            + self.skipped_non_numeric
            + self.skipped_duplicate
            + self.skipped_multi_token
    }
}

/// Immutable word → vector table. Vectors are stored row-major as `f32`.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    name: String,
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries. Words are lowercased; later
    /// duplicates are rejected.
    pub fn from_entries<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        let mut builder: Option<Builder> = None;
        for (word, vector) in entries {
            let b = builder.get_or_insert_with(|| Builder::new(vector.len()));
            if vector.len() != b.dimension {
                return Err(Error::DimensionMismatch {
                    expected: b.dimension,
                    got: vector.len(),
                });
            }
            let word = normalize_word(word.as_ref())
                .ok_or_else(|| Error::InvalidInput(format!("invalid word {:?}", word.as_ref())))?;
            if !b.push(word.clone(), &vector) {
                return Err(Error::InvalidInput(format!("duplicate word {word:?}")));
            }
        }
        builder
            .ok_or_else(|| Error::InvalidInput("embedding table has no entries".into()))?
            .finish(name.into())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Cosine between two in-table words.
    pub fn cosine_words(&self, a: &str, b: &str) -> Result<f64> {
        let ia = self
            .index_of(a)
            .ok_or_else(|| Error::OutOfVocabulary(a.to_string()))?;
        let ib = self
            .index_of(b)
            .ok_or_else(|| Error::OutOfVocabulary(b.to_string()))?;
        if self.norms[ia] == 0.0 || self.norms[ib] == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok((dot(self.row(ia), self.row(ib)) / (self.norms[ia] * self.norms[ib])).clamp(-1.0, 1.0))
    }
}

struct Builder {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl Builder {
    fn new(dimension: usize) -> Self {
        Self {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    fn push(&mut self, word: String, vector: &[f32]) -> bool {
        if self.index.contains_key(&word) {
            return false;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        true
    }

    fn finish(self, name: String) -> Result<EmbeddingTable> {
        if self.words.is_empty() || self.dimension == 0 {
            return Err(Error::InvalidInput("embedding table has no entries".into()));
        }
        let norms = self
            .data
            .chunks(self.dimension)
            .map(|r| dot(r, r).sqrt())
            .collect();
        Ok(EmbeddingTable {
            name,
            dimension: self.dimension,
            words: self.words,
            index: self.index,
            data: self.data,
            norms,
        })
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Lowercases a token; `None` for empty or whitespace-containing entries.
fn normalize_word(raw: &str) -> Option<String> {
    if raw.is_empty() || raw.chars().any(char::is_whitespace) {
        return None;
    }
    Some(raw.to_lowercase())
}

/// Loads a whitespace-separated `word v1 ... vd` text file.
///
/// The dimension is fixed by the first valid entry (or the word2vec header).
/// Lines with a different component count, duplicate words after
/// lowercasing, or non-numeric components are skipped and counted; more than
/// `max_non_numeric` non-numeric lines is an error.
pub fn load_embeddings(path: &Path, opts: &LoadOptions) -> Result<(EmbeddingTable, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut report = LoadReport::default();
    let mut builder: Option<Builder> = None;
    let mut vector = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 && opts.format == EmbeddingFormat::Word2vecText {
            let header: Vec<&str> = line.split_whitespace().collect();
            let dim = header
                .get(1)
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|_| header.len() == 2)
                .ok_or_else(|| Error::parse(path, 1, "expected `count dimension` header"))?;
            builder = Some(Builder::new(dim));
            continue;
        }

        let mut tokens = line.split(' ').filter(|t| !t.is_empty());
        let Some(word) = tokens.next() else { continue };
        vector.clear();
        let mut numeric = true;
        for tok in tokens {
            match tok.parse::<f32>() {
                Ok(v) if v.is_finite() => vector.push(v),
                _ => {
                    numeric = false;
                    vector.push(0.0);
                }
            }
        }
        let dim = builder.as_ref().map(|b| b.dimension);
        if let Some(d) = dim {
            if vector.len() != d {
                // multi-token words show up as a length surplus
                if vector.len() > d {
                    report.skipped_multi_token += 1;
                } else {
                    report.skipped_length_mismatch += 1;
                }
                continue;
            }
        }
        if !numeric {
            report.skipped_non_numeric += 1;
            if report.skipped_non_numeric > opts.max_non_numeric {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!(
                        "more than {} lines with non-numeric components",
                        opts.max_non_numeric
                    ),
                ));
            }
            continue;
        }
        if vector.is_empty() {
            report.skipped_length_mismatch += 1;
            continue;
        }
        let Some(word) = normalize_word(word) else {
            report.skipped_multi_token += 1;
            continue;
        };
        let b = builder.get_or_insert_with(|| Builder::new(vector.len()));
        if let Some(keep) = &opts.restrict_to {
            if !keep.contains(&word) {
                continue;
            }
        }
        if b.push(word, &vector) {
            report.loaded += 1;
        } else {
            report.skipped_duplicate += 1;
        }
    }

    let builder = builder
        .filter(|b| !b.words.is_empty())
        .ok_or_else(|| Error::parse(path, 0, "no valid embedding entries"))?;
    Ok((builder.finish(opts.name.clone())?, report))
}

/// Cosine similarity, clamped to [-1, 1]. Zero-norm input is an error.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Top-`k` words by cosine to `word`, excluding the word itself, in
/// descending order with lexicographic tie-breaking. Exhaustive scan.
pub fn nearest_neighbors(word: &str, k: usize, table: &EmbeddingTable) -> Result<Vec<(String, f64)>> {
    nearest_neighbors_within(word, k, table, |_| true)
}

/// As [`nearest_neighbors`], restricted to candidates accepted by `keep`.
pub fn nearest_neighbors_within(
    word: &str,
    k: usize,
    table: &EmbeddingTable,
    keep: impl Fn(&str) -> bool,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let qi = table
        .index_of(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    let qn = table.norms[qi];
    if qn == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let q = table.row(qi);
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|&i| i != qi && table.norms[i] > 0.0 && keep(&table.words[i]))
        .map(|i| {
            let c = (dot(q, table.row(i)) / (qn * table.norms[i])).clamp(-1.0, 1.0);
            (i, c)
        })
        .collect();
    let by_rank = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1)
            .then_with(|| table.words[a.0].cmp(&table.words[b.0]))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    Ok(scored
        .into_iter()
        .map(|(i, c)| (table.words[i].clone(), c))
        .collect())
}

/// Word → Zipf score.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    entries: HashMap<String, f64>,
}

impl FrequencyTable {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (w, z) in entries {
            if !z.is_finite() || z < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "zipf score for {:?} must be finite and non-negative, got {z}",
                    w.as_ref()
                )));
            }
            map.entry(w.as_ref().to_lowercase()).or_insert(z);
        }
        Ok(Self { entries: map })
    }

    /// Zipf score, 0 for unknown words.
    pub fn zipf(&self, word: &str) -> f64 {
        self.entries.get(word).copied().unwrap_or(0.0)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads `word<TAB>zipf` lines. A first line whose score column does not
/// parse is treated as a header.
pub fn load_frequencies(path: &Path) -> Result<FrequencyTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(word), Some(score)) = (cols.next(), cols.next()) else {
            return Err(Error::parse(path, i + 1, "expected word<TAB>zipf"));
        };
        match score.trim().parse::<f64>() {
            Ok(z) if z.is_finite() && z >= 0.0 => entries.push((word.trim().to_string(), z)),
            Ok(_) => return Err(Error::parse(path, i + 1, "zipf must be finite and >= 0")),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::parse(path, i + 1, format!("bad zipf value {score:?}"))),
        }
    }
    FrequencyTable::from_entries(entries)
}
