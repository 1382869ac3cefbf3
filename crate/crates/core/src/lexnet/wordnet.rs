//! Reader for the WordNet 3.x database layout (`data.{pos}` / `index.{pos}`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv];

    pub fn file_suffix(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adj => 'a',
            Pos::Adv => 'r',
        }
    }

    /// Maps a WordNet pos/ss_type letter; satellites (`s`) fold into adjectives.
    pub fn from_letter(c: char) -> Option<Pos> {
        match c {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' | 's' => Some(Pos::Adj),
            'r' => Some(Pos::Adv),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

/// Stable synset identity: database file plus byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub pos: Pos,
    pub offset: u32,
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}-{}", self.offset, self.pos.letter())
    }
}

/// Dense node handle into a [`SynsetGraph`].
pub type Node = usize;

#[derive(Debug, Clone)]
pub struct Synset {
    pub id: SynsetId,
    /// `s` for adjective satellites, otherwise the pos letter.
    pub ss_type: char,
    /// Lowercased lemmas; multi-word lemmas keep their underscores.
    pub lemmas: Vec<String>,
    pub lexname: &'static str,
    pub hypernyms: Vec<Node>,
    pub instance_hypernyms: Vec<Node>,
    /// (source lemma index, target synset, target lemma index), 0-based.
    pub antonyms: Vec<(usize, Node, usize)>,
    pub meronyms: Vec<Node>,
    /// `lemma.pos.NN` naming as used by common WordNet toolkits.
    pub name: String,
}

impl Synset {
    pub fn pos(&self) -> Pos {
        self.id.pos
    }

    pub fn all_hypernyms(&self) -> impl Iterator<Item = Node> + '_ {
        self.hypernyms.iter().chain(&self.instance_hypernyms).copied()
    }
}

/// Standard lexicographer file names, indexed by `lex_filenum`.
pub const LEXNAMES: [&str; 45] = [
    "adj.all",
    "adj.pert",
    "adv.all",
    "noun.Tops",
    "noun.act",
    "noun.animal",
    "noun.artifact",
    "noun.attribute",
    "noun.body",
    "noun.cognition",
    "noun.communication",
    "noun.event",
    "noun.feeling",
    "noun.food",
    "noun.group",
    "noun.location",
    "noun.motive",
    "noun.object",
    "noun.person",
    "noun.phenomenon",
    "noun.plant",
    "noun.possession",
    "noun.process",
    "noun.quantity",
    "noun.relation",
    "noun.shape",
    "noun.state",
    "noun.substance",
    "noun.time",
    "verb.body",
    "verb.change",
    "verb.cognition",
    "verb.communication",
    "verb.competition",
    "verb.consumption",
    "verb.contact",
    "verb.creation",
    "verb.emotion",
    "verb.motion",
    "verb.perception",
    "verb.possession",
    "verb.social",
    "verb.stative",
    "verb.weather",
    "adj.ppl",
];

#[derive(Debug, Clone, Default, Serialize)]
pub struct ParseReport {
    pub synsets_per_pos: BTreeMap<String, usize>,
    pub index_entries: usize,
    /// Non-taxonomic pointers whose target synset is absent (partial databases).
    pub dangling_pointers: usize,
}

#[derive(Debug, Clone)]
pub struct SynsetGraph {
    synsets: Vec<Synset>,
    by_id: HashMap<SynsetId, Node>,
    /// word → synsets in index order, nouns first, then verbs, adjectives, adverbs.
    index: HashMap<String, Vec<Node>>,
    /// word → synsets per pos in index order (used for sense numbering).
    min_depth: Vec<u32>,
    max_depth: Vec<u32>,
    max_depth_by_pos: [u32; 4],
    has_pos: [bool; 4],
}

struct RawPointer {
    symbol: String,
    target: SynsetId,
    source: usize,
    dest: usize,
}

struct RawSynset {
    id: SynsetId,
    ss_type: char,
    lemmas: Vec<String>,
    lexname: &'static str,
    pointers: Vec<RawPointer>,
}

impl SynsetGraph {
    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synset(&self, node: Node) -> &Synset {
        &self.synsets[node]
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn node(&self, id: SynsetId) -> Option<Node> {
        self.by_id.get(&id).copied()
    }

    /// Synsets of a word across all parts of speech. Lookup lowercases and
    /// maps spaces to underscores.
    pub fn synsets_of(&self, word: &str) -> &[Node] {
        let key = word.trim().to_lowercase().replace(' ', "_");
        self.index.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, word: &str) -> bool {
        !self.synsets_of(word).is_empty()
    }

    /// All indexed lemmas, sorted.
    pub fn lemmas(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.index.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn min_depth(&self, node: Node) -> u32 {
        self.min_depth[node]
    }

    pub fn max_depth(&self, node: Node) -> u32 {
        self.max_depth[node]
    }

    /// Longest hypernym chain among synsets of `pos` (no simulated root).
    pub fn max_depth_by_pos(&self, pos: Pos) -> u32 {
        self.max_depth_by_pos[pos.index()]
    }

    pub fn has_pos(&self, pos: Pos) -> bool {
        self.has_pos[pos.index()]
    }

    /// Most frequent part of speech among the word's synsets. Ties resolve in
    /// noun, verb, adjective, adverb order.
    pub fn majority_pos(&self, word: &str) -> Option<Pos> {
        let mut counts = [0usize; 4];
        for &n in self.synsets_of(word) {
            counts[self.synsets[n].pos().index()] += 1;
        }
        let best = *counts.iter().max()?;
        if best == 0 {
            return None;
        }
        Pos::ALL.into_iter().find(|p| counts[p.index()] == best)
    }

    /// Lexicographer names over all of a word's synsets.
    pub fn lexnames_of(&self, word: &str) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self
            .synsets_of(word)
            .iter()
            .map(|&n| self.synsets[n].lexname)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Builds a graph from already-parsed synsets; used by the parser and by
    /// in-memory fixtures.
    fn assemble(raws: Vec<RawSynset>, index_lists: Vec<(String, Pos, Vec<SynsetId>)>) -> Result<(Self, ParseReport)> {
        let mut report = ParseReport::default();
        let mut by_id = HashMap::with_capacity(raws.len());
        for (i, r) in raws.iter().enumerate() {
            if by_id.insert(r.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate synset {}", r.id)));
            }
            *report
                .synsets_per_pos
                .entry(r.id.pos.file_suffix().to_string())
                .or_default() += 1;
        }

        let mut synsets = Vec::with_capacity(raws.len());
        for r in &raws {
            let mut s = Synset {
                id: r.id,
                ss_type: r.ss_type,
                lemmas: r.lemmas.clone(),
                lexname: r.lexname,
                hypernyms: Vec::new(),
                instance_hypernyms: Vec::new(),
                antonyms: Vec::new(),
                meronyms: Vec::new(),
                name: String::new(),
            };
            for p in &r.pointers {
                let target = by_id.get(&p.target).copied();
                match (p.symbol.as_str(), target) {
                    ("@", Some(t)) => s.hypernyms.push(t),
                    ("@i", Some(t)) => s.instance_hypernyms.push(t),
                    ("@" | "@i", None) => {
                        return Err(Error::InvalidInput(format!(
                            "synset {} has hypernym {} that does not exist",
                            r.id, p.target
                        )))
                    }
                    (_, None) => report.dangling_pointers += 1,
                    ("!", Some(t)) => s.antonyms.push((p.source, t, p.dest)),
                    ("%m" | "%s" | "%p", Some(t)) => s.meronyms.push(t),
                    _ => {}
                }
            }
            synsets.push(s);
        }

        // index: word -> nodes, in pos order then index-file order
        let mut per_pos: HashMap<(String, Pos), Vec<Node>> = HashMap::new();
        let mut index: HashMap<String, Vec<Node>> = HashMap::new();
        let mut index_lists = index_lists;
        index_lists.sort_by(|a, b| a.1.cmp(&b.1));
        for (lemma, pos, ids) in index_lists {
            let mut nodes = Vec::with_capacity(ids.len());
            for id in ids {
                match by_id.get(&id) {
                    Some(&n) => nodes.push(n),
                    None => report.dangling_pointers += 1,
                }
            }
            if nodes.is_empty() {
                continue;
            }
            report.index_entries += 1;
            index.entry(lemma.clone()).or_default().extend(&nodes);
            per_pos.insert((lemma, pos), nodes);
        }

        // names: first lemma, pos letter (s for satellites), sense number in that lemma's index entry
        for (n, s) in synsets.iter_mut().enumerate() {
            let first = s.lemmas.first().cloned().unwrap_or_default();
            let sense = per_pos
                .get(&(first.clone(), s.id.pos))
                .and_then(|v| v.iter().position(|&m| m == n))
                .map(|i| i + 1)
                .unwrap_or(0);
            s.name = format!("{first}.{}.{sense:02}", s.ss_type);
        }

        let (min_depth, max_depth) = depths(&synsets);
        let mut max_depth_by_pos = [0u32; 4];
        let mut has_pos = [false; 4];
        for (n, s) in synsets.iter().enumerate() {
            let i = s.id.pos.index();
            has_pos[i] = true;
            max_depth_by_pos[i] = max_depth_by_pos[i].max(max_depth[n]);
        }

        Ok((
            SynsetGraph {
                synsets,
                by_id,
                index,
                min_depth,
                max_depth,
                max_depth_by_pos,
                has_pos,
            },
            report,
        ))
    }
}

/// Memoised min/max hypernym depth (edges to a root). Back-edges of any
/// cycle are ignored.
fn depths(synsets: &[Synset]) -> (Vec<u32>, Vec<u32>) {
    const UNSET: u32 = u32::MAX;
    let n = synsets.len();
    let mut min_d = vec![UNSET; n];
    let mut max_d = vec![UNSET; n];
    let mut on_stack = vec![false; n];
    for start in 0..n {
        if min_d[start] != UNSET {
            continue;
        }
        // iterative post-order DFS
        let mut stack: Vec<(Node, usize)> = vec![(start, 0)];
        on_stack[start] = true;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let parents: Vec<Node> = synsets[node].all_hypernyms().collect();
            if *next < parents.len() {
                let p = parents[*next];
                *next += 1;
                if min_d[p] == UNSET && !on_stack[p] {
                    on_stack[p] = true;
                    stack.push((p, 0));
                }
                continue;
            }
            let known: Vec<Node> = parents.into_iter().filter(|&p| min_d[p] != UNSET).collect();
            if known.is_empty() {
                min_d[node] = 0;
                max_d[node] = 0;
            } else {
                min_d[node] = 1 + known.iter().map(|&p| min_d[p]).min().unwrap();
                max_d[node] = 1 + known.iter().map(|&p| max_d[p]).max().unwrap();
            }
            on_stack[node] = false;
            stack.pop();
        }
    }
    (min_d, max_d)
}

fn lexname(num: usize) -> Option<&'static str> {
    LEXNAMES.get(num).copied()
}

/// Strips adjective syntactic markers such as `(a)`, `(p)`, `(ip)`.
fn clean_lemma(raw: &str) -> String {
    let base = match raw.find('(') {
        Some(i) if raw.ends_with(')') => &raw[..i],
        _ => raw,
    };
    base.to_lowercase()
}

fn parse_data_line(path: &Path, lineno: usize, line: &str, pos: Pos) -> Result<RawSynset> {
    let err = |m: &str| Error::parse(path, lineno, m.to_string());
    let body = line.split(" | ").next().unwrap_or(line);
    let mut t = body.split_ascii_whitespace();
    let offset: u32 = t
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("malformed synset offset"))?;
    let lex_num: usize = t
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("malformed lex_filenum"))?;
    let ss_type = t
        .next()
        .and_then(|s| s.chars().next())
        .filter(|c| Pos::from_letter(*c) == Some(pos))
        .ok_or_else(|| err("ss_type does not match file"))?;
    let w_cnt = t
        .next()
        .and_then(|s| usize::from_str_radix(s, 16).ok())
        .ok_or_else(|| err("malformed w_cnt"))?;
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let w = t.next().ok_or_else(|| err("truncated lemma list"))?;
        t.next().ok_or_else(|| err("missing lex_id"))?;
        lemmas.push(clean_lemma(w));
    }
    if lemmas.is_empty() {
        return Err(err("synset without lemmas"));
    }
    let p_cnt: usize = t
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("malformed p_cnt"))?;
    let mut pointers = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let (Some(sym), Some(off), Some(p), Some(st)) = (t.next(), t.next(), t.next(), t.next()) else {
            return Err(err("truncated pointer list"));
        };
        let target_offset: u32 = off.parse().map_err(|_| err("malformed pointer offset"))?;
        let target_pos = p
            .chars()
            .next()
            .and_then(Pos::from_letter)
            .ok_or_else(|| err("malformed pointer pos"))?;
        let st = u16::from_str_radix(st, 16).map_err(|_| err("malformed source/target"))?;
        pointers.push(RawPointer {
            symbol: sym.to_string(),
            target: SynsetId {
                pos: target_pos,
                offset: target_offset,
            },
            source: ((st >> 8) as usize).saturating_sub(1),
            dest: ((st & 0xff) as usize).saturating_sub(1),
        });
    }
    Ok(RawSynset {
        id: SynsetId { pos, offset },
        ss_type,
        lemmas,
        lexname: lexname(lex_num).ok_or_else(|| err("unknown lex_filenum"))?,
        pointers,
    })
}

fn parse_index_line(path: &Path, lineno: usize, line: &str, pos: Pos) -> Result<(String, Pos, Vec<SynsetId>)> {
    let err = |m: &str| Error::parse(path, lineno, m.to_string());
    let mut t = line.split_ascii_whitespace();
    let lemma = t.next().ok_or_else(|| err("empty index line"))?.to_lowercase();
    t.next().ok_or_else(|| err("missing pos"))?;
    let synset_cnt: usize = t
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("malformed synset_cnt"))?;
    let p_cnt: usize = t
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("malformed p_cnt"))?;
    for _ in 0..p_cnt {
        t.next();
    }
    t.next(); // sense_cnt
    t.next(); // tagsense_cnt
    let mut ids = Vec::with_capacity(synset_cnt);
    for _ in 0..synset_cnt {
        let off: u32 = t
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("malformed synset offset"))?;
        ids.push(SynsetId { pos, offset: off });
    }
    Ok((lemma, pos, ids))
}

/// Parses a WordNet database directory. At least one `data.{pos}` /
/// `index.{pos}` pair must be present; partial databases (fixtures) are
/// accepted as long as every hypernym target exists.
pub fn parse_wordnet(dir: &Path) -> Result<(SynsetGraph, ParseReport)> {
    let mut raws = Vec::new();
    let mut index_lists = Vec::new();
    let mut found = 0;
    for pos in Pos::ALL {
        let data_path = dir.join(format!("data.{}", pos.file_suffix()));
        let index_path = dir.join(format!("index.{}", pos.file_suffix()));
        match (data_path.is_file(), index_path.is_file()) {
            (false, false) => continue,
            (true, false) => {
                return Err(Error::InvalidInput(format!(
                    "{} present without {}",
                    data_path.display(),
                    index_path.display()
                )))
            }
            (false, true) => {
                return Err(Error::InvalidInput(format!(
                    "{} present without {}",
                    index_path.display(),
                    data_path.display()
                )))
            }
            (true, true) => found += 1,
        }
        let data = fs::read_to_string(&data_path).map_err(|e| Error::io(&data_path, e))?;
        for (i, line) in data.lines().enumerate() {
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            raws.push(parse_data_line(&data_path, i + 1, line, pos)?);
        }
        let index = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        for (i, line) in index.lines().enumerate() {
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            index_lists.push(parse_index_line(&index_path, i + 1, line, pos)?);
        }
    }
    if found == 0 {
        return Err(Error::InvalidInput(format!(
            "no WordNet data/index files in {}",
            dir.display()
        )));
    }
    SynsetGraph::assemble(raws, index_lists)
}

/// Reads per-synset sense tag counts from `index.sense` when present.
pub fn read_sense_tag_counts(dir: &Path, graph: &SynsetGraph) -> Result<Option<HashMap<Node, f64>>> {
    let path = dir.join("index.sense");
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut counts: HashMap<Node, f64> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split(' ').collect();
        if cols.len() < 4 {
            continue;
        }
        let key = cols[0];
        let ss_digit = key
            .split('%')
            .nth(1)
            .and_then(|s| s.chars().next())
            .ok_or_else(|| Error::parse(&path, i + 1, "malformed sense key"))?;
        let pos = match ss_digit {
            '1' => Pos::Noun,
            '2' => Pos::Verb,
            '3' | '5' => Pos::Adj,
            '4' => Pos::Adv,
            _ => return Err(Error::parse(&path, i + 1, "unknown ss_type in sense key")),
        };
        let offset: u32 = cols[1]
            .parse()
            .map_err(|_| Error::parse(&path, i + 1, "malformed offset"))?;
        let tag: f64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(&path, i + 1, "malformed tag count"))?;
        if let Some(n) = graph.node(SynsetId { pos, offset }) {
            *counts.entry(n).or_default() += tag;
        }
    }
    Ok(Some(counts))
}

#[cfg(any(test, feature = "fixtures"))]
pub mod writer {
    //! Serialises synset descriptions into the WordNet database format.

    use super::*;
    use std::fmt::Write as _;

    #[derive(Debug, Clone)]
    pub struct SynsetSpec {
        pub pos: Pos,
        pub satellite: bool,
        pub lemmas: Vec<String>,
        pub lex_filenum: usize,
        /// Indices into the spec list.
        pub hypernyms: Vec<usize>,
        pub instance_hypernyms: Vec<usize>,
        /// (source lemma, target spec, target lemma), 0-based.
        pub antonyms: Vec<(usize, usize, usize)>,
        pub part_meronyms: Vec<usize>,
        pub gloss: String,
    }

    /// Writes `data.*` / `index.*` files with correct byte offsets.
    pub fn write_database(dir: &Path, specs: &[SynsetSpec]) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let header = "  1 This database layout follows the WordNet 3.0 format.\n";
        let mut offsets = vec![0u32; specs.len()];
        for pos in Pos::ALL {
            let members: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].pos == pos).collect();
            // offsets are fixed-width, so line lengths do not depend on them
            let mut cursor = header.len() as u32;
            for &i in &members {
                offsets[i] = cursor;
                cursor += render(specs, i, &vec![0; specs.len()]).len() as u32;
            }
        }
        for pos in Pos::ALL {
            let members: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].pos == pos).collect();
            let mut data = String::from(header);
            for &i in &members {
                data.push_str(&render(specs, i, &offsets));
            }
            fs::write(dir.join(format!("data.{}", pos.file_suffix())), data)?;

            let mut idx: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for &i in &members {
                for l in &specs[i].lemmas {
                    idx.entry(l.to_lowercase()).or_default().push(i);
                }
            }
            let mut index = String::from(header);
            for (lemma, ss) in idx {
                let _ = write!(index, "{lemma} {} {} 0 {} 0", pos.letter(), ss.len(), ss.len());
                for s in ss {
                    let _ = write!(index, " {:08}", offsets[s]);
                }
                index.push_str("  \n");
            }
            fs::write(dir.join(format!("index.{}", pos.file_suffix())), index)?;
        }
        Ok(())
    }

    fn render(specs: &[SynsetSpec], i: usize, offsets: &[u32]) -> String {
        let s = &specs[i];
        let ss = if s.satellite { 's' } else { s.pos.letter() };
        let mut out = format!("{:08} {:02} {} {:02x}", offsets[i], s.lex_filenum, ss, s.lemmas.len());
        for l in &s.lemmas {
            let _ = write!(out, " {l} 0");
        }
        let mut ptrs: Vec<String> = Vec::new();
        let ptr = |sym: &str, t: usize, st: u16| {
            format!("{sym} {:08} {} {st:04x}", offsets[t], specs[t].pos.letter())
        };
        for &h in &s.hypernyms {
            ptrs.push(ptr("@", h, 0));
        }
        for &h in &s.instance_hypernyms {
            ptrs.push(ptr("@i", h, 0));
        }
        for &(src, t, dst) in &s.antonyms {
            ptrs.push(ptr("!", t, (((src + 1) << 8) | (dst + 1)) as u16));
        }
        for &m in &s.part_meronyms {
            ptrs.push(ptr("%p", m, 0));
        }
        let _ = write!(out, " {:03}", ptrs.len());
        for p in ptrs {
            out.push(' ');
            out.push_str(&p);
        }
        let _ = writeln!(out, " | {}  ", s.gloss);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::writer::*;
    use super::*;

    fn spec(pos: Pos, lemmas: &[&str], lex: usize, hyper: &[usize]) -> SynsetSpec {
        SynsetSpec {
            pos,
            satellite: false,
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
            lex_filenum: lex,
            hypernyms: hyper.to_vec(),
            instance_hypernyms: vec![],
            antonyms: vec![],
            part_meronyms: vec![],
            gloss: "test".into(),
        }
    }

    #[test]
    fn three_synset_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let specs = vec![
            spec(Pos::Noun, &["entity"], 3, &[]),
            spec(Pos::Noun, &["animal", "beast"], 5, &[0]),
            spec(Pos::Noun, &["dog"], 5, &[1]),
        ];
        write_database(dir.path(), &specs).unwrap();
        let (g, report) = parse_wordnet(dir.path()).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(report.synsets_per_pos["noun"], 3);
        let dog = g.synsets_of("dog")[0];
        let animal = g.synsets_of("beast")[0];
        assert_eq!(g.synset(dog).hypernyms, vec![animal]);
        assert_eq!(g.max_depth(dog), 2);
        assert_eq!(g.min_depth(animal), 1);
        assert_eq!(g.synset(dog).lexname, "noun.animal");
        assert_eq!(g.synset(animal).name, "animal.n.01");
        assert_eq!(g.max_depth_by_pos(Pos::Noun), 2);
    }

    #[test]
    fn byte_offsets_are_real() {
        let dir = tempfile::tempdir().unwrap();
        let specs = vec![spec(Pos::Noun, &["entity"], 3, &[]), spec(Pos::Noun, &["thing"], 3, &[0])];
        write_database(dir.path(), &specs).unwrap();
        let data = fs::read_to_string(dir.path().join("data.noun")).unwrap();
        let (g, _) = parse_wordnet(dir.path()).unwrap();
        for s in g.synsets() {
            let at = s.id.offset as usize;
            assert!(data[at..].starts_with(&format!("{:08}", s.id.offset)));
        }
    }

    #[test]
    fn empty_directory_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(parse_wordnet(dir.path()).is_err());
    }

    #[test]
    fn malformed_offset_errors() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.noun"), "0000x123 03 n 01 thing 0 000 | x\n").unwrap();
        fs::write(dir.path().join("index.noun"), "").unwrap();
        let e = parse_wordnet(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn dangling_hypernym_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("data.noun"),
            "00000000 03 n 01 thing 0 001 @ 00099999 n 0000 | x\n",
        )
        .unwrap();
        fs::write(dir.path().join("index.noun"), "thing n 1 1 @ 1 0 00000000\n").unwrap();
        assert!(parse_wordnet(dir.path()).is_err());
    }

    #[test]
    fn adjective_markers_are_stripped() {
        assert_eq!(clean_lemma("Galore(ip)"), "galore");
        assert_eq!(clean_lemma("big"), "big");
    }
}
