use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;
use simrel::curation::{
    build_vocabulary, curate, degrees, filter_pipeline, generate_candidates, load_word_list, CurationConfig,
    CurationInputs,
};
use simrel::embed::{EmbeddingTable, FrequencyTable};
use simrel::fixtures::{World, WorldSpec};
use simrel::lexnet::{parse_conceptnet, parse_wordnet, ConceptEdges, Relation, SynsetGraph};
use simrel::pairs::{CandidatePair, Source};

struct Bundle {
    _dir: tempfile::TempDir,
    graph: SynsetGraph,
    edges: ConceptEdges,
    table: EmbeddingTable,
    freq: FrequencyTable,
    vocab: BTreeSet<String>,
}

fn bundle(spec: WorldSpec) -> Bundle {
    let world = World::generate(&spec);
    let dir = tempfile::tempdir().unwrap();
    let paths = world.write(dir.path()).unwrap();
    let (graph, _) = parse_wordnet(&paths.wordnet).unwrap();
    let (edges, _) = parse_conceptnet(&paths.conceptnet).unwrap();
    let lexicon = load_word_list(&paths.lexicon).unwrap();
    let vocab = build_vocabulary(&graph, &lexicon).unwrap();
    Bundle {
        _dir: dir,
        graph,
        edges,
        table: world.table(),
        freq: world.frequency_table(),
        vocab,
    }
}

fn small_quotas(n: usize) -> BTreeMap<Source, usize> {
    Source::ALL.into_iter().map(|s| (s, n)).collect()
}

/// Brute-force check of the relation that defines each source.
fn satisfies(b: &Bundle, cfg: &CurationConfig, p: &CandidatePair) -> bool {
    let g = &b.graph;
    let (x, y) = (p.w1.as_str(), p.w2.as_str());
    let has = |node: usize, w: &str| g.synset(node).lemmas.iter().any(|l| l == w);
    let nodes = 0..g.len();
    match p.source {
        Source::WnSynonym => nodes.clone().any(|n| has(n, x) && has(n, y)),
        Source::WnCohyponym => nodes.clone().any(|a| {
            has(a, x)
                && nodes.clone().any(|c| {
                    c != a && has(c, y) && g.synset(a).hypernyms.iter().any(|h| g.synset(c).hypernyms.contains(h))
                })
        }),
        Source::WnHypernym => nodes.clone().any(|a| {
            g.synset(a)
                .hypernyms
                .iter()
                .any(|&h| (has(a, x) && has(h, y)) || (has(a, y) && has(h, x)))
        }),
        Source::WnAntonym => nodes.clone().any(|a| {
            g.synset(a).antonyms.iter().any(|&(si, t, ti)| {
                let (u, v) = (&g.synset(a).lemmas[si], &g.synset(t).lemmas[ti]);
                (u == x && v == y) || (u == y && v == x)
            })
        }),
        Source::CnRelatedTo | Source::CnAtLocation | Source::CnPartOf | Source::CnUsedFor | Source::CnCauses => {
            let rel: Relation = p.source.as_str()[3..].parse().unwrap();
            b.edges
                .iter()
                .any(|(r, h, t, _)| r == rel && ((h == x && t == y) || (h == y && t == x)))
        }
        Source::EmbNeighbor => {
            let top = |q: &str| -> Vec<String> {
                let mut scored: Vec<(f64, &String)> = b
                    .vocab
                    .iter()
                    .filter(|w| w.as_str() != q && b.table.contains(w))
                    .map(|w| (b.table.cosine_words(q, w).unwrap(), w))
                    .collect();
                scored.sort_by(|a, c| c.0.total_cmp(&a.0).then(a.1.cmp(c.1)));
                scored.into_iter().take(cfg.neighbors_per_word).map(|(_, w)| w.clone()).collect()
            };
            top(x).iter().any(|w| w == y) || top(y).iter().any(|w| w == x)
        }
        Source::NegCommon => b.freq.zipf(x) >= cfg.common_zipf && b.freq.zipf(y) >= cfg.common_zipf,
        Source::NegFar => b.table.cosine_words(x, y).unwrap() < cfg.far_threshold,
        Source::NegCrossdomain => {
            let lx = g.lexnames_of(x);
            let ly = g.lexnames_of(y);
            !lx.is_empty() && !ly.is_empty() && lx.iter().all(|l| !ly.contains(l))
        }
        Source::NegCrosspos => g.majority_pos(x).is_some() && g.majority_pos(y).is_some() && g.majority_pos(x) != g.majority_pos(y),
    }
}

#[test]
fn vocabulary_is_lexicon_intersection() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_wordnet");
    let (g, _) = parse_wordnet(&dir).unwrap();
    let v = build_vocabulary(&g, ["dog", "Cat", "zzqq"]).unwrap();
    assert_eq!(v, BTreeSet::from(["cat".to_string(), "dog".to_string()]));
    assert!(build_vocabulary(&g, Vec::<String>::new()).is_err());
    assert!(build_vocabulary(&g, ["zzqq"]).is_err());
}

#[test]
fn every_generated_pair_satisfies_its_relation() {
    let b = bundle(WorldSpec {
        domains: 3,
        branching: vec![2, 3],
        themes: 4,
        embedding_dim: 48,
        ..Default::default()
    });
    let cfg = CurationConfig {
        quotas: small_quotas(15),
        ..Default::default()
    };
    let (pairs, report) = generate_candidates(&b.vocab, &b.graph, &b.edges, &b.table, &b.freq, &cfg).unwrap();
    assert!(!pairs.is_empty());
    let sources: BTreeSet<Source> = pairs.iter().map(|p| p.source).collect();
    assert!(sources.len() >= 10, "only {sources:?} produced");
    for p in &pairs {
        assert!(b.vocab.contains(&p.w1) && b.vocab.contains(&p.w2));
        assert!(p.w1 < p.w2);
        assert!(satisfies(&b, &cfg, p), "{p:?} does not satisfy its relation");
    }
    assert_eq!(report.stages[0].total, pairs.len());
}

#[test]
fn zero_quotas_give_empty_output() {
    let b = bundle(WorldSpec {
        embedding_dim: 16,
        ..Default::default()
    });
    let cfg = CurationConfig {
        quotas: small_quotas(0),
        ..Default::default()
    };
    let inputs = CurationInputs {
        vocab: &b.vocab,
        graph: &b.graph,
        edges: &b.edges,
        table: &b.table,
        freq: &b.freq,
        exclusions: &BTreeSet::new(),
    };
    let (pairs, report) = curate(&inputs, &cfg).unwrap();
    assert!(pairs.is_empty());
    assert_eq!(report.final_count, 0);
    assert!(!report.partial);
}

#[test]
fn shortfall_is_flagged_not_fatal() {
    let b = bundle(WorldSpec {
        domains: 2,
        branching: vec![2],
        embedding_dim: 16,
        ..Default::default()
    });
    let cfg = CurationConfig {
        quotas: BTreeMap::from([(Source::WnAntonym, 100_000)]),
        ..Default::default()
    };
    let (pairs, report) = generate_candidates(&b.vocab, &b.graph, &b.edges, &b.table, &b.freq, &cfg).unwrap();
    assert!(report.partial);
    assert_eq!(report.shortfall[&Source::WnAntonym], 200_000 - pairs.len());
}

#[test]
fn full_run_invariants_and_determinism() {
    let b = bundle(WorldSpec {
        embedding_dim: 64,
        ..Default::default()
    });
    let mut cfg = CurationConfig {
        quotas: small_quotas(60),
        degree_cap: 6,
        ..Default::default()
    };
    let exclusions = BTreeSet::new();
    let inputs = CurationInputs {
        vocab: &b.vocab,
        graph: &b.graph,
        edges: &b.edges,
        table: &b.table,
        freq: &b.freq,
        exclusions: &exclusions,
    };
    let (pairs, report) = curate(&inputs, &cfg).unwrap();
    assert!(pairs.len() > 100);
    let keys: BTreeSet<_> = pairs.iter().map(|p| p.key()).collect();
    assert_eq!(keys.len(), pairs.len());
    assert!(degrees(&pairs).values().all(|&d| d <= 6));
    assert!(report.max_degree() <= 6);
    for p in &pairs {
        let floor = if p.source == Source::NegCommon { 4.5 } else { 2.0 };
        assert!(b.freq.zipf(&p.w1) >= floor && b.freq.zipf(&p.w2) >= floor, "{p:?}");
        assert!(p.w1 < p.w2);
    }
    assert_eq!(report.final_count, report.final_per_source.values().sum::<usize>());
    for (s, n) in &report.final_per_source {
        assert!(*n <= cfg.quota(*s));
    }

    let first = serde_json::to_string(&(&pairs, &report)).unwrap();
    let again = curate(&inputs, &cfg).unwrap();
    assert_eq!(first, serde_json::to_string(&(&again.0, &again.1)).unwrap());
    cfg.workers = 4;
    let parallel = curate(&inputs, &cfg).unwrap();
    assert_eq!(first, serde_json::to_string(&(&parallel.0, &parallel.1)).unwrap());
}

fn arb_pairs() -> impl Strategy<Value = Vec<CandidatePair>> {
    let word = prop::sample::select(vec!["ant", "bee", "cow", "dog", "eel", "fox", "gnu", "hen", "x9", "yak"]);
    let source = prop::sample::select(Source::ALL.to_vec());
    prop::collection::vec((word.clone(), word, source), 0..200).prop_map(|v| {
        v.into_iter()
            .map(|(a, b, s)| CandidatePair {
                w1: a.to_string(),
                w2: b.to_string(),
                source: s,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn filter_output_respects_all_constraints(pairs in arb_pairs(), cap in 1usize..6, seed in 0u64..1000) {
        let freq = FrequencyTable::from_entries(
            [("ant", 1.5), ("bee", 2.0), ("cow", 3.0), ("dog", 5.0), ("eel", 4.6), ("fox", 4.4), ("gnu", 2.5), ("hen", 6.0), ("yak", 4.5)],
        ).unwrap();
        let cfg = CurationConfig { degree_cap: cap, seed, trim_to_quota: false, ..Default::default() };
        let (out, report) = filter_pipeline(pairs, &freq, &BTreeSet::new(), &cfg).unwrap();
        let keys: BTreeSet<_> = out.iter().map(|p| p.key()).collect();
        prop_assert_eq!(keys.len(), out.len());
        prop_assert!(degrees(&out).values().all(|&d| d <= cap));
        for p in &out {
            prop_assert!(p.w1 < p.w2);
            let floor = if p.source == Source::NegCommon { 4.5 } else { 2.0 };
            prop_assert!(freq.zipf(&p.w1) >= floor && freq.zipf(&p.w2) >= floor);
        }
        prop_assert_eq!(report.final_count, out.len());
    }
}
