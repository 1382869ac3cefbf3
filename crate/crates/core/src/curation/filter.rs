use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_plain_word, CurationConfig, CurationReport, StageCount};
use crate::embed::FrequencyTable;
use crate::error::Result;
use crate::pairs::{canonical, CandidatePair, Source};

/// Drops pairs until no word has more than `cap` incident pairs. Words are
/// visited from highest to lowest initial degree; an over-cap word loses the
/// pairs whose partner has the highest Zipf score first, ties broken by a
/// seeded random key. Dropping only lowers degrees, so one pass suffices.
fn degree_cap(pairs: Vec<CandidatePair>, freq: &FrequencyTable, cap: usize, rng: &mut ChaCha8Rng) -> Vec<CandidatePair> {
    let tie: Vec<u64> = (0..pairs.len()).map(|_| rng.random()).collect();
    let mut incident: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        incident.entry(&p.w1).or_default().push(i);
        incident.entry(&p.w2).or_default().push(i);
    }
    let mut degree: BTreeMap<&str, usize> = incident.iter().map(|(w, v)| (*w, v.len())).collect();
    let mut order: Vec<(&str, usize)> = degree.iter().map(|(w, d)| (*w, *d)).filter(|&(_, d)| d > cap).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut alive = vec![true; pairs.len()];
    for (word, _) in order {
        let excess = degree[word].saturating_sub(cap);
        if excess == 0 {
            continue;
        }
        let partner = |i: usize| if pairs[i].w1 == word { &pairs[i].w2 } else { &pairs[i].w1 };
        let mut live: Vec<usize> = incident[word].iter().copied().filter(|&i| alive[i]).collect();
        live.sort_by(|&a, &b| {
            freq.zipf(partner(b))
                .total_cmp(&freq.zipf(partner(a)))
                .then(tie[a].cmp(&tie[b]))
        });
        for &i in &live[..excess] {
            alive[i] = false;
            *degree.get_mut(pairs[i].w1.as_str()).unwrap() -= 1;
            *degree.get_mut(pairs[i].w2.as_str()).unwrap() -= 1;
        }
    }
    pairs
        .into_iter()
        .zip(alive)
        .filter_map(|(p, keep)| keep.then_some(p))
        .collect()
}

fn trim_to_quota(pairs: Vec<CandidatePair>, cfg: &CurationConfig, rng: &mut ChaCha8Rng) -> Vec<CandidatePair> {
    let mut by_source: BTreeMap<Source, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_source.entry(p.source).or_default().push(i);
    }
    let mut keep = vec![false; pairs.len()];
    for (source, idx) in by_source {
        let quota = cfg.quota(source);
        if idx.len() <= quota {
            idx.into_iter().for_each(|i| keep[i] = true);
        } else {
            for j in sample(rng, idx.len(), quota) {
                keep[idx[j]] = true;
            }
        }
    }
    pairs
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// Runs the filters in order: exclusions, invalid pairs, deduplication,
/// degree cap, Zipf floors and (if enabled) the per-source quota trim.
/// Output keeps input order.
pub fn filter_pipeline(
    pairs: Vec<CandidatePair>,
    freq: &FrequencyTable,
    exclusions: &BTreeSet<(String, String)>,
    cfg: &CurationConfig,
) -> Result<(Vec<CandidatePair>, CurationReport)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1000);
    let mut report = CurationReport::default();
    report.stages.push(StageCount::of("input", &pairs));

    let pairs: Vec<_> = pairs
        .into_iter()
        .filter(|p| !exclusions.contains(&canonical(&p.w1.to_lowercase(), &p.w2.to_lowercase())))
        .collect();
    report.stages.push(StageCount::of("exclusions", &pairs));

    let pairs: Vec<_> = pairs
        .into_iter()
        .filter_map(|p| CandidatePair::new(&p.w1, &p.w2, p.source).ok())
        .filter(|p| is_plain_word(&p.w1) && is_plain_word(&p.w2))
        .collect();
    report.stages.push(StageCount::of("invalid", &pairs));

    let mut seen = BTreeSet::new();
    let pairs: Vec<_> = pairs
        .into_iter()
        .filter(|p| seen.insert((p.w1.clone(), p.w2.clone())))
        .collect();
    report.stages.push(StageCount::of("dedup", &pairs));

    let pairs = degree_cap(pairs, freq, cfg.degree_cap, &mut rng);
    report.stages.push(StageCount::of("degree-cap", &pairs));

    let pairs: Vec<_> = pairs
        .into_iter()
        .filter(|p| {
            let floor = if p.source == Source::NegCommon { cfg.common_zipf } else { cfg.zipf_floor };
            freq.zipf(&p.w1) >= floor && freq.zipf(&p.w2) >= floor
        })
        .collect();
    report.stages.push(StageCount::of("zipf", &pairs));

    let pairs = if cfg.trim_to_quota {
        let trimmed = trim_to_quota(pairs, cfg, &mut rng);
        report.stages.push(StageCount::of("quota", &trimmed));
        trimmed
    } else {
        pairs
    };
    report.set_final(&pairs);
    Ok((pairs, report))
}
