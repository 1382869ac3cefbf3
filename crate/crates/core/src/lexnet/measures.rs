//! Taxonomy similarity measures and the 8-D lexical feature vector.
//!
//! Synset-level measures follow the conventions of the widely used NLTK
//! WordNet interface: non-noun taxonomies get a simulated root, Wu–Palmer
//! picks its subsumer by minimum depth and scores with maximum depth, and
//! Lin/Jiang–Conrath use the most informative common subsumer.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ic::InformationContent;
use super::wordnet::{Node, Pos, SynsetGraph};

/// Ancestor of a synset: a real node or the simulated root above all roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Anc {
    Real(Node),
    Root,
}

const ROOT_NAME: &str = "*ROOT*";

fn needs_root(g: &SynsetGraph, n: Node) -> bool {
    g.synset(n).pos() != Pos::Noun
}

/// BFS distances from `n` up the hypernym graph (including `n` at 0). With
/// `simulate_root` the virtual root sits one edge above the farthest ancestor.
fn hypernym_distances(g: &SynsetGraph, n: Node, simulate_root: bool) -> HashMap<Anc, u32> {
    let mut dist = HashMap::new();
    let mut queue = VecDeque::from([(n, 0u32)]);
    while let Some((s, d)) = queue.pop_front() {
        if dist.contains_key(&Anc::Real(s)) {
            continue;
        }
        dist.insert(Anc::Real(s), d);
        for h in g.synset(s).all_hypernyms() {
            queue.push_back((h, d + 1));
        }
    }
    if simulate_root {
        let far = dist.values().copied().max().unwrap_or(0);
        dist.insert(Anc::Root, far + 1);
    }
    dist
}

fn anc_distances(g: &SynsetGraph, a: Anc, simulate_root: bool) -> HashMap<Anc, u32> {
    match a {
        Anc::Real(n) => hypernym_distances(g, n, simulate_root),
        Anc::Root => HashMap::from([(Anc::Root, 0)]),
    }
}

fn shortest_path(g: &SynsetGraph, a: Anc, b: Anc, simulate_root: bool) -> Option<u32> {
    if a == b {
        return Some(0);
    }
    let da = anc_distances(g, a, simulate_root);
    let db = anc_distances(g, b, simulate_root);
    da.iter()
        .filter_map(|(k, d1)| db.get(k).map(|d2| d1 + d2))
        .min()
}

/// Edge count of the shortest hypernym/hyponym path between two synsets.
pub fn shortest_path_distance(g: &SynsetGraph, a: Node, b: Node, simulate_root: bool) -> Option<u32> {
    shortest_path(g, Anc::Real(a), Anc::Real(b), simulate_root)
}

/// 1 / (1 + shortest path), simulating a root when either synset is not a noun.
pub fn path_similarity(g: &SynsetGraph, a: Node, b: Node) -> Option<f64> {
    let sim = needs_root(g, a) || needs_root(g, b);
    shortest_path_distance(g, a, b, sim).map(|d| 1.0 / (d as f64 + 1.0))
}

/// Common hypernyms including the synsets themselves.
fn common_hypernyms(g: &SynsetGraph, a: Node, b: Node) -> Vec<Node> {
    let up = |n: Node| -> HashSet<Node> {
        hypernym_distances(g, n, false)
            .into_keys()
            .filter_map(|k| match k {
                Anc::Real(n) => Some(n),
                Anc::Root => None,
            })
            .collect()
    };
    let ua = up(a);
    let ub = up(b);
    let mut v: Vec<Node> = ua.intersection(&ub).copied().collect();
    v.sort_unstable();
    v
}

/// Wu–Palmer similarity of two synsets.
pub fn wup_similarity(g: &SynsetGraph, a: Node, b: Node) -> Option<f64> {
    let need_root = needs_root(g, a) || needs_root(g, b);
    let mut candidates: Vec<Anc> = common_hypernyms(g, a, b).into_iter().map(Anc::Real).collect();
    if need_root {
        candidates.push(Anc::Root);
    }
    let min_depth = |x: &Anc| match x {
        Anc::Real(n) => g.min_depth(*n),
        Anc::Root => 0,
    };
    let deepest = candidates.iter().map(min_depth).max()?;
    let name = |x: &Anc| match x {
        Anc::Real(n) => g.synset(*n).name.as_str(),
        Anc::Root => ROOT_NAME,
    };
    let mut lowest: Vec<Anc> = candidates.into_iter().filter(|x| min_depth(x) == deepest).collect();
    lowest.sort_by(|x, y| name(x).cmp(name(y)));
    let subsumer = if lowest.contains(&Anc::Real(a)) {
        Anc::Real(a)
    } else {
        lowest[0]
    };
    let depth = match subsumer {
        Anc::Real(n) => g.max_depth(n) + 1,
        Anc::Root => 1,
    } as f64;
    let l1 = shortest_path(g, Anc::Real(a), subsumer, need_root)? as f64 + depth;
    let l2 = shortest_path(g, Anc::Real(b), subsumer, need_root)? as f64 + depth;
    Some(2.0 * depth / (l1 + l2))
}

/// Taxonomy depth used by Leacock–Chodorow for a part of speech.
pub fn lch_depth(g: &SynsetGraph, pos: Pos) -> u32 {
    g.max_depth_by_pos(pos) + u32::from(pos != Pos::Noun)
}

/// Raw Leacock–Chodorow similarity, `-ln((dist + 1) / 2D)`.
pub fn lch_similarity(g: &SynsetGraph, a: Node, b: Node) -> Option<f64> {
    let pos = g.synset(a).pos();
    if g.synset(b).pos() != pos {
        return None;
    }
    let depth = lch_depth(g, pos);
    if depth == 0 {
        return None;
    }
    let dist = shortest_path_distance(g, a, b, needs_root(g, a))?;
    Some(-(((dist + 1) as f64) / (2.0 * depth as f64)).ln())
}

fn lcs_ic(g: &SynsetGraph, ic: &InformationContent, a: Node, b: Node) -> Option<(f64, f64, f64)> {
    let ic1 = ic.ic(g, a)?;
    let ic2 = ic.ic(g, b)?;
    let lcs = common_hypernyms(g, a, b)
        .into_iter()
        .filter_map(|s| ic.ic(g, s))
        .fold(0.0f64, f64::max);
    Some((ic1, ic2, lcs))
}

/// Lin similarity in [0, 1]; `None` when the pos has no IC counts.
pub fn lin_similarity(g: &SynsetGraph, ic: &InformationContent, a: Node, b: Node) -> Option<f64> {
    if g.synset(a).pos() != g.synset(b).pos() {
        return None;
    }
    let (ic1, ic2, lcs) = lcs_ic(g, ic, a, b)?;
    if a == b {
        return Some(1.0);
    }
    let denom = ic1 + ic2;
    if denom == 0.0 || !denom.is_finite() {
        return Some(0.0);
    }
    Some((2.0 * lcs / denom).clamp(0.0, 1.0))
}

/// Jiang–Conrath distance `IC(a) + IC(b) - 2 IC(lcs)`; `Some(None)` marks the
/// zero-similarity cases (a root or uncounted synset).
pub fn jcn_distance(g: &SynsetGraph, ic: &InformationContent, a: Node, b: Node) -> Option<Option<f64>> {
    if g.synset(a).pos() != g.synset(b).pos() {
        return None;
    }
    let (ic1, ic2, lcs) = lcs_ic(g, ic, a, b)?;
    if a == b {
        return Some(Some(0.0));
    }
    if ic1 == 0.0 || ic2 == 0.0 || !ic1.is_finite() || !ic2.is_finite() {
        return Some(None);
    }
    Some(Some((ic1 + ic2 - 2.0 * lcs).max(0.0)))
}

/// The eight lexical-network features, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LexFeatures {
    pub path_sim: f64,
    pub lch: f64,
    pub wup: f64,
    pub lin: f64,
    pub jcn: f64,
    pub shortest_path_norm: f64,
    pub same_category: f64,
    pub synset_overlap: f64,
}

impl LexFeatures {
    pub const LEN: usize = 8;

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.path_sim,
            self.lch,
            self.wup,
            self.lin,
            self.jcn,
            self.shortest_path_norm,
            self.same_category,
            self.synset_overlap,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            path_sim: a[0],
            lch: a[1],
            wup: a[2],
            lin: a[3],
            jcn: a[4],
            shortest_path_norm: a[5],
            same_category: a[6],
            synset_overlap: a[7],
        }
    }
}

/// Max Wu–Palmer over same-pos synset pairs; `None` when either word is
/// absent from WordNet or no pair is comparable.
pub fn word_wup(g: &SynsetGraph, w1: &str, w2: &str) -> Option<f64> {
    word_measure(g, w1, w2, |a, b| wup_similarity(g, a, b))
}

/// Max path similarity over same-pos synset pairs.
pub fn word_path(g: &SynsetGraph, w1: &str, w2: &str) -> Option<f64> {
    word_measure(g, w1, w2, |a, b| path_similarity(g, a, b))
}

fn ordered<'a>(w1: &'a str, w2: &'a str) -> (&'a str, &'a str) {
    if w1 <= w2 {
        (w1, w2)
    } else {
        (w2, w1)
    }
}

fn word_measure(
    g: &SynsetGraph,
    w1: &str,
    w2: &str,
    f: impl Fn(Node, Node) -> Option<f64>,
) -> Option<f64> {
    let (w1, w2) = ordered(w1, w2);
    let s1 = g.synsets_of(w1);
    let s2 = g.synsets_of(w2);
    let mut best: Option<f64> = None;
    for &a in s1 {
        for &b in s2 {
            if g.synset(a).pos() != g.synset(b).pos() {
                continue;
            }
            if let Some(v) = f(a, b) {
                best = Some(best.map_or(v, |m: f64| m.max(v)));
            }
        }
    }
    best
}

/// Assembles the 8-D feature vector for a word pair. Total: words missing
/// from WordNet give all zeros, uncomparable measures give 0.
///
/// Each measure is the maximum over same-pos synset pairs (adjective
/// satellites count as adjectives). LCH is divided by its per-pos maximum
/// `ln(2D)`; Jiang–Conrath distance maps to `1 / (1 + d)`; the shortest path
/// is taken over the real taxonomy only (no simulated root) across all
/// synset pairs and mapped to `1 / (1 + len)`.
pub fn assemble_features(g: &SynsetGraph, ic: &InformationContent, w1: &str, w2: &str) -> LexFeatures {
    let (w1, w2) = ordered(w1, w2);
    let s1 = g.synsets_of(w1);
    let s2 = g.synsets_of(w2);
    if s1.is_empty() || s2.is_empty() {
        return LexFeatures::default();
    }
    let mut f = LexFeatures::default();
    for &a in s1 {
        for &b in s2 {
            let (sa, sb) = (g.synset(a), g.synset(b));
            if sa.lexname == sb.lexname {
                f.same_category = 1.0;
            }
            if let Some(d) = shortest_path_distance(g, a, b, false) {
                f.shortest_path_norm = f.shortest_path_norm.max(1.0 / (1.0 + d as f64));
            }
            if sa.pos() != sb.pos() {
                continue;
            }
            if let Some(v) = path_similarity(g, a, b) {
                f.path_sim = f.path_sim.max(v);
            }
            if let Some(v) = wup_similarity(g, a, b) {
                f.wup = f.wup.max(v);
            }
            if let Some(v) = lch_similarity(g, a, b) {
                let max = (2.0 * lch_depth(g, sa.pos()) as f64).ln();
                if max > 0.0 {
                    f.lch = f.lch.max((v / max).clamp(0.0, 1.0));
                }
            }
            if let Some(v) = lin_similarity(g, ic, a, b) {
                f.lin = f.lin.max(v);
            }
            if let Some(Some(d)) = jcn_distance(g, ic, a, b) {
                f.jcn = f.jcn.max(1.0 / (1.0 + d));
            }
        }
    }
    let set1: HashSet<Node> = s1.iter().copied().collect();
    let set2: HashSet<Node> = s2.iter().copied().collect();
    let inter = set1.intersection(&set2).count() as f64;
    let union = set1.union(&set2).count() as f64;
    f.synset_overlap = inter / union;
    f
}

#[cfg(test)]
mod tests {
    use super::super::wordnet::{parse_wordnet, writer::*};
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
            gloss: "g".into(),
        }
    }

    /// entity > animal > {dog, cat > kitty}, entity > artifact > tool; verbs run, walk (separate roots)
    fn toy() -> (SynsetGraph, InformationContent) {
        let specs = vec![
            spec(Pos::Noun, &["entity"], 3, &[]),
            spec(Pos::Noun, &["animal"], 5, &[0]),
            spec(Pos::Noun, &["dog", "hound"], 5, &[1]),
            spec(Pos::Noun, &["cat"], 5, &[1]),
            spec(Pos::Noun, &["kitty"], 5, &[3]),
            spec(Pos::Noun, &["artifact"], 6, &[0]),
            spec(Pos::Noun, &["tool", "dog"], 6, &[5]),
            spec(Pos::Verb, &["run"], 38, &[]),
            spec(Pos::Verb, &["walk"], 38, &[]),
        ];
        let dir = tempfile::tempdir().unwrap();
        write_database(dir.path(), &specs).unwrap();
        let (g, _) = parse_wordnet(dir.path()).unwrap();
        let ic = InformationContent::from_counts(&g, &HashMap::new(), 1.0);
        (g, ic)
    }

    fn node(g: &SynsetGraph, w: &str) -> Node {
        g.synsets_of(w)[0]
    }

    #[test]
    fn wup_hand_values() {
        let (g, _) = toy();
        // dog(depth 2) cat(depth 2) lcs animal (max_depth 1 -> depth 2): 2*2/(3+3)
        let v = wup_similarity(&g, node(&g, "hound"), node(&g, "cat")).unwrap();
        assert!((v - 4.0 / 6.0).abs() < 1e-12);
        // kitty vs dog: lcs animal, len1 = 2+2, len2 = 1+2
        let v = wup_similarity(&g, node(&g, "kitty"), node(&g, "hound")).unwrap();
        assert!((v - 4.0 / 7.0).abs() < 1e-12);
        // two verbs under the simulated root: 2*1/((1+1)+(1+1))
        let v = wup_similarity(&g, node(&g, "run"), node(&g, "walk")).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(wup_similarity(&g, node(&g, "cat"), node(&g, "cat")), Some(1.0));
    }

    #[test]
    fn path_and_lch_hand_values() {
        let (g, _) = toy();
        let (dog, cat) = (node(&g, "hound"), node(&g, "cat"));
        assert_eq!(path_similarity(&g, dog, cat), Some(1.0 / 3.0));
        // D(noun) = 3 (kitty) -> -ln(3/6)
        let l = lch_similarity(&g, dog, cat).unwrap();
        assert!((l - 2.0f64.ln()).abs() < 1e-12);
        // verbs: D = 0 + 1, no real path -> via root dist 2 -> -ln(3/2) < 0
        assert_eq!(path_similarity(&g, node(&g, "run"), node(&g, "walk")), Some(1.0 / 3.0));
    }

    #[test]
    fn self_pair_features() {
        let (g, ic) = toy();
        let f = assemble_features(&g, &ic, "cat", "cat");
        assert_eq!(f.path_sim, 1.0);
        assert_eq!(f.wup, 1.0);
        assert_eq!(f.synset_overlap, 1.0);
        assert_eq!(f.same_category, 1.0);
        assert_eq!(f.shortest_path_norm, 1.0);
        assert_eq!(f.lch, 1.0);
        assert_eq!(f.jcn, 1.0);
        assert_eq!(f.lin, 1.0);
    }

    #[test]
    fn oov_gives_zero_vector() {
        let (g, ic) = toy();
        assert_eq!(assemble_features(&g, &ic, "qqq", "zzz"), LexFeatures::default());
        assert_eq!(assemble_features(&g, &ic, "dog", "zzz"), LexFeatures::default());
    }

    #[test]
    fn polysemous_word_takes_max_and_overlap_is_jaccard() {
        let (g, ic) = toy();
        // "dog" is both an animal and a tool; the animal sense is closer to cat
        let f = assemble_features(&g, &ic, "dog", "cat");
        assert!((f.wup - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(f.same_category, 1.0);
        // dog: {dog-animal, tool}, hound: {dog-animal}
        let f = assemble_features(&g, &ic, "dog", "hound");
        assert!((f.synset_overlap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn features_are_symmetric_and_bounded() {
        let (g, ic) = toy();
        let words = ["entity", "animal", "dog", "cat", "kitty", "tool", "run", "walk", "hound"];
        for a in words {
            for b in words {
                let f = assemble_features(&g, &ic, a, b);
                assert_eq!(f, assemble_features(&g, &ic, b, a));
                for v in f.to_array() {
                    assert!((0.0..=1.0).contains(&v), "{a} {b} {f:?}");
                }
            }
        }
    }

    #[test]
    fn same_category_matches_brute_force() {
        let (g, ic) = toy();
        let words = ["dog", "cat", "tool", "run", "artifact"];
        for a in words {
            for b in words {
                let brute = g.lexnames_of(a).iter().any(|x| g.lexnames_of(b).contains(x));
                assert_eq!(assemble_features(&g, &ic, a, b).same_category == 1.0, brute);
            }
        }
    }
}
