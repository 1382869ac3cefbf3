//! Information content over the noun and verb taxonomies.
//!
//! Counts file format (one synset per line after a header line):
//! `<offset><n|v> <count>[ ROOT]`. Root lines contribute to the per-pos
//! total used as the probability denominator.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::wordnet::{Node, Pos, SynsetGraph, SynsetId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct InformationContent {
    counts: HashMap<Node, f64>,
    noun_total: f64,
    verb_total: f64,
    pub smoothing: String,
}

fn ancestors_incl(g: &SynsetGraph, n: Node) -> HashSet<Node> {
    let mut seen = HashSet::new();
    let mut stack = vec![n];
    while let Some(s) = stack.pop() {
        if seen.insert(s) {
            stack.extend(g.synset(s).all_hypernyms());
        }
    }
    seen
}

impl InformationContent {
    /// Propagates per-synset counts (plus `smoothing` per synset) to every
    /// hypernym, so IC never decreases towards the leaves.
    pub fn from_counts(g: &SynsetGraph, own: &HashMap<Node, f64>, smoothing: f64) -> Self {
        let mut counts: HashMap<Node, f64> = HashMap::new();
        for (n, s) in g.synsets().iter().enumerate() {
            if !matches!(s.pos(), Pos::Noun | Pos::Verb) {
                continue;
            }
            let c = own.get(&n).copied().unwrap_or(0.0) + smoothing;
            if c == 0.0 {
                continue;
            }
            for a in ancestors_incl(g, n) {
                *counts.entry(a).or_default() += c;
            }
        }
        let mut ic = Self {
            counts,
            noun_total: 0.0,
            verb_total: 0.0,
            smoothing: format!("sense tag counts with add-{smoothing} smoothing"),
        };
        ic.recompute_totals(g);
        ic
    }

    fn recompute_totals(&mut self, g: &SynsetGraph) {
        self.noun_total = 0.0;
        self.verb_total = 0.0;
        for (&n, &c) in &self.counts {
            let s = g.synset(n);
            if s.hypernyms.is_empty() && s.instance_hypernyms.is_empty() {
                match s.pos() {
                    Pos::Noun => self.noun_total += c,
                    Pos::Verb => self.verb_total += c,
                    _ => {}
                }
            }
        }
    }

    /// `-ln(count / total)`; `None` for parts of speech without counts,
    /// infinity for uncounted synsets.
    pub fn ic(&self, g: &SynsetGraph, n: Node) -> Option<f64> {
        let total = match g.synset(n).pos() {
            Pos::Noun => self.noun_total,
            Pos::Verb => self.verb_total,
            _ => return None,
        };
        if total <= 0.0 {
            return None;
        }
        let c = self.counts.get(&n).copied().unwrap_or(0.0);
        if c == 0.0 {
            return Some(f64::INFINITY);
        }
        Some(-(c / total).ln())
    }

    pub fn count(&self, n: Node) -> f64 {
        self.counts.get(&n).copied().unwrap_or(0.0)
    }

    pub fn to_file_string(&self, g: &SynsetGraph) -> String {
        let mut nodes: Vec<Node> = self.counts.keys().copied().collect();
        nodes.sort_by_key(|&n| g.synset(n).id);
        let mut out = String::from("wnver::simrel-ic\n");
        for n in nodes {
            let s = g.synset(n);
            let root = if s.hypernyms.is_empty() && s.instance_hypernyms.is_empty() {
                " ROOT"
            } else {
                ""
            };
            let _ = writeln!(out, "{}{} {}{root}", s.id.offset, s.id.pos.letter(), self.counts[&n]);
        }
        out
    }

    pub fn load(path: &Path, g: &SynsetGraph) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut counts = HashMap::new();
        let (mut noun_total, mut verb_total) = (0.0, 0.0);
        for (i, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 2 {
                return Err(Error::parse(path, i + 1, "expected `<offset><pos> <count>`"));
            }
            let key = fields[0];
            let pos = match key.chars().last() {
                Some('n') => Pos::Noun,
                Some('v') => Pos::Verb,
                _ => return Err(Error::parse(path, i + 1, "pos suffix must be n or v")),
            };
            let offset: u32 = key[..key.len() - 1]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "malformed offset"))?;
            let value: f64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "malformed count"))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::parse(path, i + 1, "count must be finite and >= 0"));
            }
            if fields.get(2) == Some(&"ROOT") {
                match pos {
                    Pos::Noun => noun_total += value,
                    _ => verb_total += value,
                }
            }
            if let Some(n) = g.node(SynsetId { pos, offset }) {
                if value != 0.0 {
                    counts.insert(n, value);
                }
            }
        }
        Ok(Self {
            counts,
            noun_total,
            verb_total,
            smoothing: format!("loaded from {}", path.display()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::wordnet::{parse_wordnet, writer::*};
    use super::*;

    fn graph() -> SynsetGraph {
        let mk = |lemmas: &[&str], hyper: &[usize]| SynsetSpec {
            pos: Pos::Noun,
            satellite: false,
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
            lex_filenum: 3,
            hypernyms: hyper.to_vec(),
            instance_hypernyms: vec![],
            antonyms: vec![],
            part_meronyms: vec![],
            gloss: String::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        write_database(dir.path(), &[mk(&["root"], &[]), mk(&["mid"], &[0]), mk(&["leaf"], &[1])]).unwrap();
        parse_wordnet(dir.path()).unwrap().0
    }

    #[test]
    fn root_ic_is_zero_and_monotone() {
        let g = graph();
        let own = HashMap::from([(g.synsets_of("leaf")[0], 5.0)]);
        let ic = InformationContent::from_counts(&g, &own, 1.0);
        let (r, m, l) = (g.synsets_of("root")[0], g.synsets_of("mid")[0], g.synsets_of("leaf")[0]);
        assert_eq!(ic.ic(&g, r), Some(0.0));
        assert!(ic.ic(&g, m).unwrap() <= ic.ic(&g, l).unwrap());
        // leaf 6 of 8
        assert!((ic.ic(&g, l).unwrap() + (6.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let g = graph();
        let ic = InformationContent::from_counts(&g, &HashMap::new(), 1.0);
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), ic.to_file_string(&g)).unwrap();
        let back = InformationContent::load(f.path(), &g).unwrap();
        for n in 0..g.len() {
            assert_eq!(ic.ic(&g, n), back.ic(&g, n));
        }
    }
}
