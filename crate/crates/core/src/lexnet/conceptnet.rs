//! ConceptNet assertion dumps (`uri \t relation \t start \t end \t json`).

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    RelatedTo,
    AtLocation,
    PartOf,
    UsedFor,
    Causes,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::RelatedTo,
        Relation::AtLocation,
        Relation::PartOf,
        Relation::UsedFor,
        Relation::Causes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::RelatedTo => "RelatedTo",
            Relation::AtLocation => "AtLocation",
            Relation::PartOf => "PartOf",
            Relation::UsedFor => "UsedFor",
            Relation::Causes => "Causes",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let name = s.strip_prefix("/r/").unwrap_or(s);
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == name)
            .ok_or(())
    }
}

/// Edge set keyed by (relation, head, tail). A repeated assertion keeps the
/// larger weight.
#[derive(Debug, Clone, Default)]
pub struct ConceptEdges {
    edges: BTreeMap<(Relation, String, String), f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptReport {
    pub lines: usize,
    pub kept: usize,
    pub other_relation: usize,
    pub non_english: usize,
    pub multi_token: usize,
    pub self_loops: usize,
    pub malformed: usize,
}

impl ConceptEdges {
    pub fn insert(&mut self, relation: Relation, head: &str, tail: &str, weight: f64) -> bool {
        if head == tail {
            return false;
        }
        let w = self
            .edges
            .entry((relation, head.to_string(), tail.to_string()))
            .or_insert(weight);
        *w = w.max(weight);
        true
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Relation, &str, &str, f64)> {
        self.edges
            .iter()
            .map(|((r, h, t), w)| (*r, h.as_str(), t.as_str(), *w))
    }

    pub fn of(&self, relation: Relation) -> impl Iterator<Item = (&str, &str, f64)> {
        self.iter()
            .filter(move |e| e.0 == relation)
            .map(|(_, h, t, w)| (h, t, w))
    }
}

/// `/c/en/dog/n/...` → `Some("dog")` for English single-token concepts.
fn english_term(uri: &str) -> std::result::Result<String, bool> {
    let mut parts = uri.split('/').skip(1);
    if parts.next() != Some("c") {
        return Err(false);
    }
    if parts.next() != Some("en") {
        return Err(false);
    }
    let term = parts.next().unwrap_or("").to_lowercase();
    if term.is_empty() || !term.chars().all(|c| c.is_ascii_lowercase()) {
        return Err(true);
    }
    Ok(term)
}

pub fn parse_conceptnet_reader<R: BufRead>(reader: R, path: &Path) -> Result<(ConceptEdges, ConceptReport)> {
    let mut edges = ConceptEdges::default();
    let mut rep = ConceptReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rep.lines += 1;
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        if cols.len() < 4 {
            rep.malformed += 1;
            log::debug!("{}:{}: fewer than four columns", path.display(), i + 1);
            continue;
        }
        let Ok(relation) = cols[1].parse::<Relation>() else {
            rep.other_relation += 1;
            continue;
        };
        let (head, tail) = match (english_term(cols[2]), english_term(cols[3])) {
            (Ok(h), Ok(t)) => (h, t),
            (Err(false), _) | (_, Err(false)) => {
                rep.non_english += 1;
                continue;
            }
            _ => {
                rep.multi_token += 1;
                continue;
            }
        };
        let weight = cols
            .get(4)
            .and_then(|m| serde_json::from_str::<serde_json::Value>(m).ok())
            .and_then(|v| v.get("weight").and_then(|w| w.as_f64()))
            .unwrap_or(1.0);
        if edges.insert(relation, &head, &tail, weight) {
            rep.kept += 1;
        } else {
            rep.self_loops += 1;
        }
    }
    Ok((edges, rep))
}

/// Reads a plain or gzip-compressed dump (detected by magic bytes).
pub fn parse_conceptnet(path: &Path) -> Result<(ConceptEdges, ConceptReport)> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        parse_conceptnet_reader(BufReader::new(MultiGzDecoder::new(file)), path)
    } else {
        parse_conceptnet_reader(BufReader::new(file), path)
    }
}
