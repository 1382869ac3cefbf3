//! Synthetic resource bundles: a small WordNet-format taxonomy, embeddings
//! aligned with it, a ConceptNet-style dump, frequencies and a lexicon.
//!
//! Words are generated pseudo-words (`bako`, `tilume`, ...). Each noun domain
//! is a tree under a shared root; every word also belongs to a "theme" that
//! cuts across domains and drives both the associative edges and a shared
//! component of the embeddings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embed::{EmbeddingFormat, EmbeddingTable, FrequencyTable, LoadOptions};
use crate::error::{Error, Result};
use crate::lexnet::wordnet::writer::{write_database, SynsetSpec};
use crate::lexnet::{Lexicon, Pos};
use crate::pairs::ScoredPair;
use crate::scorer::Resources;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const DOMAIN_LEXNAMES: [usize; 8] = [5, 6, 13, 20, 15, 18, 27, 17];

#[derive(Debug, Clone)]
pub struct WorldSpec {
    pub seed: u64,
    pub embedding_dim: usize,
    pub domains: usize,
    /// children per node at each level below a domain's top synset
    pub branching: Vec<usize>,
    pub themes: usize,
    pub synonym_rate: f64,
    pub polysemy_rate: f64,
    pub verb_synsets: usize,
    pub adjective_pairs: usize,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            embedding_dim: 300,
            domains: 6,
            branching: vec![3, 4, 5],
            themes: 12,
            synonym_rate: 0.2,
            polysemy_rate: 0.05,
            verb_synsets: 24,
            adjective_pairs: 8,
        }
    }
}

pub struct World {
    pub specs: Vec<SynsetSpec>,
    pub vectors: Vec<(String, Vec<f32>)>,
    pub frequencies: BTreeMap<String, f64>,
    pub themes: BTreeMap<String, usize>,
    pub concept_lines: Vec<String>,
    pub lexicon_words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct WorldPaths {
    pub root: PathBuf,
    pub wordnet: PathBuf,
    pub embeddings: PathBuf,
    pub conceptnet: PathBuf,
    pub frequencies: PathBuf,
    pub lexicon: PathBuf,
}

/// Deterministic pronounceable word for an index, at least two syllables.
pub fn pseudo_word(mut i: usize) -> String {
    let syllables = CONSONANTS.len() * VOWELS.len();
    let mut out = String::new();
    let mut n = 0;
    loop {
        let s = i % syllables;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
        i /= syllables;
        n += 1;
        if i == 0 && n >= 2 {
            break;
        }
    }
    out
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * scale / (d as f64).sqrt()).collect()
}

impl World {
    pub fn generate(spec: &WorldSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut next_word = 0usize;
        let mut fresh = || {
            next_word += 1;
            pseudo_word(next_word + 37)
        };
        let mut specs: Vec<SynsetSpec> = Vec::new();
        let mut parent: Vec<Option<usize>> = Vec::new();
        let mk = |pos: Pos, lemmas: Vec<String>, lex: usize, hyper: Option<usize>| SynsetSpec {
            pos,
            satellite: false,
            lemmas,
            lex_filenum: lex,
            hypernyms: hyper.into_iter().collect(),
            instance_hypernyms: vec![],
            antonyms: vec![],
            part_meronyms: vec![],
            gloss: String::new(),
        };

        // nouns: root, domain tops, trees
        specs.push(mk(Pos::Noun, vec![fresh()], 3, None));
        parent.push(None);
        let mut leaves_by_domain: Vec<Vec<usize>> = Vec::new();
        for d in 0..spec.domains.min(DOMAIN_LEXNAMES.len()) {
            let lex = DOMAIN_LEXNAMES[d];
            let top = specs.len();
            specs.push(mk(Pos::Noun, vec![fresh()], lex, Some(0)));
            parent.push(Some(0));
            let mut frontier = vec![top];
            for &b in &spec.branching {
                let mut next = Vec::new();
                for &p in &frontier {
                    for _ in 0..b {
                        let mut lemmas = vec![fresh()];
                        if rng.random::<f64>() < spec.synonym_rate {
                            lemmas.push(fresh());
                        }
                        next.push(specs.len());
                        specs.push(mk(Pos::Noun, lemmas, lex, Some(p)));
                        parent.push(Some(p));
                    }
                }
                frontier = next;
            }
            leaves_by_domain.push(frontier);
        }
        // polysemy: some leaf words get a second sense in another domain
        let n_domains = leaves_by_domain.len();
        let noun_words: Vec<(usize, String)> = specs
            .iter()
            .enumerate()
            .skip(1 + n_domains)
            .map(|(i, s)| (i, s.lemmas[0].clone()))
            .collect();
        for (i, w) in &noun_words {
            if n_domains > 1 && rng.random::<f64>() < spec.polysemy_rate {
                let lex = specs[*i].lex_filenum;
                let other: Vec<usize> = (0..n_domains).filter(|&d| DOMAIN_LEXNAMES[d] != lex).collect();
                let d = *other.choose(&mut rng).unwrap();
                let host = *leaves_by_domain[d].choose(&mut rng).unwrap();
                let host_parent = parent[host];
                let idx = specs.len();
                specs.push(mk(Pos::Noun, vec![w.clone()], DOMAIN_LEXNAMES[d], host_parent));
                parent.push(host_parent);
                leaves_by_domain[d].push(idx);
            }
        }

        // verbs: a few shallow trees; some reuse noun words
        let verb_roots = 3.min(spec.verb_synsets);
        for v in 0..spec.verb_synsets {
            let lex = 29 + (v % 15);
            let hyper = if v < verb_roots {
                None
            } else {
                let base = specs.len() - v;
                Some(base + rng.random_range(0..verb_roots.max(1)))
            };
            let lemma = if v % 4 == 3 {
                noun_words.choose(&mut rng).unwrap().1.clone()
            } else {
                fresh()
            };
            specs.push(mk(Pos::Verb, vec![lemma], lex, hyper));
            parent.push(hyper);
        }

        // adjectives: antonymous heads, each with one satellite
        for _ in 0..spec.adjective_pairs {
            let a = specs.len();
            let b = a + 1;
            let mut sa = mk(Pos::Adj, vec![fresh()], 0, None);
            sa.antonyms.push((0, b, 0));
            let mut sb = mk(Pos::Adj, vec![fresh()], 0, None);
            sb.antonyms.push((0, a, 0));
            specs.push(sa);
            specs.push(sb);
            for head in [a, b] {
                let mut sat = mk(Pos::Adj, vec![fresh()], 0, None);
                sat.satellite = true;
                sat.gloss = format!("similar to {}", specs[head].lemmas[0]);
                specs.push(sat);
            }
            parent.extend([None, None, None, None]);
        }

        // embeddings: sum of node directions along each sense's path, a
        // theme direction, and noise; unit length
        let d = spec.embedding_dim;
        let node_dirs: Vec<Vec<f64>> = (0..specs.len()).map(|_| gaussian(&mut rng, d, 1.0)).collect();
        let theme_dirs: Vec<Vec<f64>> = (0..spec.themes.max(1)).map(|_| gaussian(&mut rng, d, 1.0)).collect();
        let mut senses: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in specs.iter().enumerate() {
            for l in &s.lemmas {
                senses.entry(l.clone()).or_default().push(i);
            }
        }
        let mut themes = BTreeMap::new();
        let mut vectors = Vec::new();
        for (word, ss) in &senses {
            let theme = rng.random_range(0..theme_dirs.len());
            themes.insert(word.clone(), theme);
            let mut v = vec![0.0f64; d];
            for &s in ss {
                let mut node = Some(s);
                let mut path = Vec::new();
                while let Some(n) = node {
                    path.push(n);
                    node = parent[n];
                }
                path.reverse();
                for (depth, &n) in path.iter().enumerate() {
                    let w = [0.4, 1.0, 0.9, 0.7, 0.6][depth.min(4)];
                    for k in 0..d {
                        v[k] += w * node_dirs[n][k];
                    }
                }
            }
            let noise = gaussian(&mut rng, d, 0.35);
            for k in 0..d {
                v[k] += 0.9 * theme_dirs[theme][k] + noise[k];
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            vectors.push((word.clone(), v.iter().map(|x| (x / norm) as f32).collect()));
        }

        // frequencies: about a third of the words are common
        let mut frequencies = BTreeMap::new();
        for word in senses.keys() {
            let z = if rng.random::<f64>() < 0.35 {
                rng.random_range(4.5..6.5)
            } else {
                rng.random_range(1.0..4.5)
            };
            frequencies.insert(word.clone(), (z * 100.0f64).round() / 100.0);
        }

        // associative edges within themes across the vocabulary
        let by_theme: BTreeMap<usize, Vec<&String>> = themes.iter().fold(BTreeMap::new(), |mut m, (w, t)| {
            m.entry(*t).or_insert_with(Vec::new).push(w);
            m
        });
        let relations = ["RelatedTo", "RelatedTo", "RelatedTo", "AtLocation", "PartOf", "UsedFor", "Causes"];
        let mut concept_lines = Vec::new();
        for members in by_theme.values() {
            for (i, a) in members.iter().enumerate() {
                for b in members.iter().skip(i + 1) {
                    if rng.random::<f64>() < 0.25 {
                        let rel = relations.choose(&mut rng).unwrap();
                        let w: f64 = (rng.random_range(1.0..4.0f64) * 1000.0).round() / 1000.0;
                        concept_lines.push(format!(
                            "/a/[/r/{rel}/,/c/en/{a}/,/c/en/{b}/]\t/r/{rel}\t/c/en/{a}/n\t/c/en/{b}\t{{\"dataset\": \"/d/synthetic\", \"weight\": {w}}}"
                        ));
                    }
                }
            }
        }
        let extra = [
            "/a/[/r/RelatedTo/,/c/fr/chat/,/c/fr/chien/]\t/r/RelatedTo\t/c/fr/chat\t/c/fr/chien\t{\"weight\": 1.0}",
            "/a/[/r/IsA/,/c/en/bako/,/c/en/tilu/]\t/r/IsA\t/c/en/bako\t/c/en/tilu\t{\"weight\": 1.0}",
            "/a/[/r/AtLocation/,/c/en/ice_cream/,/c/en/bako/]\t/r/AtLocation\t/c/en/ice_cream\t/c/en/bako\t{\"weight\": 2.0}",
        ];
        concept_lines.extend(extra.iter().map(|s| s.to_string()));
        concept_lines.shuffle(&mut rng);

        let mut lexicon_words: Vec<String> = senses.keys().cloned().collect();
        lexicon_words.extend(["zzqq", "xkcd", "qwerty"].iter().map(|s| s.to_string()));
        lexicon_words.sort();

        Self {
            specs,
            vectors,
            frequencies,
            themes,
            concept_lines,
            lexicon_words,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<WorldPaths> {
        let p = WorldPaths {
            root: dir.to_path_buf(),
            wordnet: dir.join("wordnet"),
            embeddings: dir.join("embeddings.txt"),
            conceptnet: dir.join("conceptnet.csv"),
            frequencies: dir.join("frequencies.tsv"),
            lexicon: dir.join("lexicon.txt"),
        };
        write_database(&p.wordnet, &self.specs).map_err(|e| Error::io(&p.wordnet, e))?;
        let mut emb = String::new();
        for (w, v) in &self.vectors {
            emb.push_str(w);
            for x in v {
                let _ = write!(emb, " {x}");
            }
            emb.push('\n');
        }
        fs::write(&p.embeddings, emb).map_err(|e| Error::io(&p.embeddings, e))?;
        fs::write(&p.conceptnet, self.concept_lines.join("\n") + "\n").map_err(|e| Error::io(&p.conceptnet, e))?;
        let mut freq = String::from("word\tzipf\n");
        for (w, z) in &self.frequencies {
            let _ = writeln!(freq, "{w}\t{z}");
        }
        fs::write(&p.frequencies, freq).map_err(|e| Error::io(&p.frequencies, e))?;
        fs::write(&p.lexicon, self.lexicon_words.join("\n") + "\n").map_err(|e| Error::io(&p.lexicon, e))?;
        Ok(p)
    }

    pub fn table(&self) -> EmbeddingTable {
        EmbeddingTable::from_entries("synthetic", self.vectors.iter().cloned()).expect("valid synthetic table")
    }

    pub fn frequency_table(&self) -> FrequencyTable {
        FrequencyTable::from_entries(self.frequencies.iter().map(|(w, z)| (w.clone(), *z))).expect("valid frequencies")
    }

    pub fn words(&self) -> Vec<&str> {
        self.vectors.iter().map(|(w, _)| w.as_str()).collect()
    }
}

impl WorldPaths {
    /// Loads the written bundle back through the regular parsers.
    pub fn resources(&self) -> Result<Resources> {
        let opts = LoadOptions {
            format: EmbeddingFormat::PlainText,
            name: "synthetic".into(),
            ..LoadOptions::default()
        };
        let (table, _) = crate::embed::load_embeddings(&self.embeddings, &opts)?;
        let (graph, _) = crate::lexnet::parse_wordnet(&self.wordnet)?;
        Ok(Resources::new(table, Some(Lexicon::with_uniform_ic(graph))))
    }
}

/// Pairs whose labels are functions of the inputs: similarity is the
/// Wu–Palmer feature, relatedness is embedding cosine mapped to [0, 1].
/// Half the pairs share a lexicographer category, half are uniform.
pub fn heuristic_pairs(res: &Resources, n: usize, seed: u64) -> Vec<ScoredPair> {
    let lexicon = res.lexicon.as_ref().expect("heuristic pairs need a lexicon");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<&str> = res
        .table
        .words()
        .iter()
        .map(|w| w.as_str())
        .filter(|w| lexicon.graph.contains(w))
        .collect();
    let mut by_cat: BTreeMap<&'static str, Vec<&str>> = BTreeMap::new();
    for &w in &words {
        for c in lexicon.graph.lexnames_of(w) {
            by_cat.entry(c).or_default().push(w);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let a = *words.choose(&mut rng).unwrap();
        let b = if rng.random::<bool>() {
            let cats = lexicon.graph.lexnames_of(a);
            let cat = cats.choose(&mut rng).unwrap();
            *by_cat[cat].choose(&mut rng).unwrap()
        } else {
            *words.choose(&mut rng).unwrap()
        };
        if a == b {
            continue;
        }
        let (w1, w2) = crate::pairs::canonical(a, b);
        if !seen.insert((w1.clone(), w2.clone())) {
            continue;
        }
        let f = lexicon.features(&w1, &w2);
        let cos = res.table.cosine_words(&w1, &w2).unwrap_or(0.0);
        out.push(ScoredPair {
            w1,
            w2,
            sim: f.wup,
            rel: ((cos + 1.0) / 2.0).clamp(0.0, 1.0),
            source: "heuristic".into(),
            reason: None,
            annotator: "heuristic".into(),
        });
    }
    out
}
