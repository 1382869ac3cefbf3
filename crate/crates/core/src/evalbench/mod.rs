//! Scorer validation against human-rated benchmarks.

mod polysemy;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexnet::{Pos, SynsetGraph};
use crate::pairs::ScoredPair;
use crate::scorer::PairScorer;
use crate::stats::spearman;

pub use polysemy::{
    build_probes, load_probes, polysemy_test, write_probes, ClusterResult, Dimension, DimensionSummary, PolysemyConfig,
    PolysemyReport, ProbeCluster, SenseStatus,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub w1: String,
    pub w2: String,
    pub sim: Option<f64>,
    pub rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub name: String,
    pub rows: Vec<BenchmarkRow>,
}

/// Column mapping for a delimited benchmark file. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkFormat {
    pub w1_col: usize,
    pub w2_col: usize,
    pub sim_col: Option<usize>,
    pub rel_col: Option<usize>,
    pub header: bool,
    pub delimiter: char,
    /// Rating scale `[lo, hi]` mapped onto [0, 1]; `None` uses the column's min and max.
    pub sim_scale: Option<[f64; 2]>,
    pub rel_scale: Option<[f64; 2]>,
}

impl Default for BenchmarkFormat {
    fn default() -> Self {
        Self {
            w1_col: 0,
            w2_col: 1,
            sim_col: Some(2),
            rel_col: Some(3),
            header: true,
            delimiter: '\t',
            sim_scale: None,
            rel_scale: None,
        }
    }
}

fn cell(fields: &[&str], col: Option<usize>, path: &Path, line: usize) -> Result<Option<f64>> {
    let Some(c) = col else { return Ok(None) };
    let raw = fields.get(c).map(|s| s.trim()).unwrap_or("");
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(path, line, format!("rating {raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, "non-finite rating"));
    }
    Ok(Some(v))
}

fn rescale(values: &mut [Option<f64>], scale: Option<[f64; 2]>, what: &str) -> Result<()> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return Ok(());
    }
    let [lo, hi] = match scale {
        Some(s) => s,
        None => [
            present.iter().copied().fold(f64::INFINITY, f64::min),
            present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ],
    };
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!("{what} ratings have an empty range [{lo}, {hi}]")));
    }
    for v in values.iter_mut().flatten() {
        if *v < lo - 1e-9 || *v > hi + 1e-9 {
            return Err(Error::InvalidInput(format!("{what} rating {v} outside the scale [{lo}, {hi}]")));
        }
        *v = ((*v - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
    Ok(())
}

/// Loads a delimited benchmark and rescales both rating columns to [0, 1].
/// Rows without any rating are rejected.
pub fn load_benchmark(path: &Path, name: &str, fmt: &BenchmarkFormat) -> Result<Benchmark> {
    if fmt.sim_col.is_none() && fmt.rel_col.is_none() {
        return Err(Error::InvalidInput("benchmark format names no rating column".into()));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if (i == 0 && fmt.header) || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(fmt.delimiter).collect();
        let word = |c: usize| -> Result<String> {
            fields
                .get(c)
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .ok_or_else(|| Error::parse(path, i + 1, format!("missing word column {c}")))
        };
        let (w1, w2) = (word(fmt.w1_col)?, word(fmt.w2_col)?);
        let sim = cell(&fields, fmt.sim_col, path, i + 1)?;
        let rel = cell(&fields, fmt.rel_col, path, i + 1)?;
        if sim.is_none() && rel.is_none() {
            return Err(Error::parse(path, i + 1, "row has no rating"));
        }
        rows.push(BenchmarkRow { w1, w2, sim, rel });
    }
    let mut sims: Vec<Option<f64>> = rows.iter().map(|r| r.sim).collect();
    let mut rels: Vec<Option<f64>> = rows.iter().map(|r| r.rel).collect();
    rescale(&mut sims, fmt.sim_scale, "similarity")?;
    rescale(&mut rels, fmt.rel_scale, "relatedness")?;
    for ((r, s), l) in rows.iter_mut().zip(sims).zip(rels) {
        r.sim = s;
        r.rel = l;
    }
    Ok(Benchmark {
        name: name.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub method: String,
    pub n: usize,
    pub rho_sim: Option<f64>,
    pub rho_rel: Option<f64>,
    /// Correlation of predicted and human (similarity − relatedness).
    pub rho_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub benchmark: String,
    pub n_total: usize,
    pub n_used: usize,
    pub n_dropped: usize,
    pub rows: Vec<CorrelationRow>,
}

fn rho(pred: &[f64], human: &[Option<f64>]) -> Option<f64> {
    let (p, h): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(human)
        .filter_map(|(p, h)| h.map(|h| (*p, h)))
        .unzip();
    spearman(&p, &h).ok()
}

fn correlate(method: &str, preds: &[(f64, f64)], rows: &[&BenchmarkRow]) -> CorrelationRow {
    let sims: Vec<f64> = preds.iter().map(|p| p.0).collect();
    let rels: Vec<f64> = preds.iter().map(|p| p.1).collect();
    let human_sim: Vec<Option<f64>> = rows.iter().map(|r| r.sim).collect();
    let human_rel: Vec<Option<f64>> = rows.iter().map(|r| r.rel).collect();
    let gaps: Vec<f64> = preds.iter().map(|p| p.0 - p.1).collect();
    let human_gap: Vec<Option<f64>> = rows
        .iter()
        .map(|r| match (r.sim, r.rel) {
            (Some(s), Some(l)) => Some(s - l),
            _ => None,
        })
        .collect();
    CorrelationRow {
        method: method.to_string(),
        n: preds.len(),
        rho_sim: rho(&sims, &human_sim),
        rho_rel: rho(&rels, &human_rel),
        rho_gap: rho(&gaps, &human_gap),
    }
}

/// Correlates every method with the human ratings on the rows that all
/// methods can score. A correlation is `None` when it is undefined (fewer
/// than three rated rows or a constant prediction).
pub fn evaluate(bench: &Benchmark, methods: &[&dyn PairScorer]) -> Result<CorrelationResult> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods to evaluate".into()));
    }
    let pairs: Vec<(String, String)> = bench.rows.iter().map(|r| (r.w1.clone(), r.w2.clone())).collect();
    let scores: Vec<Vec<Option<(f64, f64)>>> = methods.iter().map(|m| m.score_batch(&pairs)).collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..pairs.len())
        .filter(|&i| scores.iter().all(|s| s[i].is_some()))
        .collect();
    let n_total = bench.rows.len();
    if keep.len() < 3 || 2 * keep.len() < n_total {
        return Err(Error::InvalidInput(format!(
            "only {} of {n_total} {} pairs are covered by every method",
            keep.len(),
            bench.name
        )));
    }
    let rows: Vec<&BenchmarkRow> = keep.iter().map(|&i| &bench.rows[i]).collect();
    let out = methods
        .iter()
        .zip(&scores)
        .map(|(m, s)| {
            let preds: Vec<(f64, f64)> = keep.iter().map(|&i| s[i].unwrap()).collect();
            correlate(m.name(), &preds, &rows)
        })
        .collect();
    Ok(CorrelationResult {
        benchmark: bench.name.clone(),
        n_total,
        n_used: keep.len(),
        n_dropped: n_total - keep.len(),
        rows: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosSplitReport {
    pub noun_noun: Option<CorrelationRow>,
    pub other: Option<CorrelationRow>,
    pub overall: CorrelationRow,
    pub n_noun_noun: usize,
    pub n_other: usize,
    pub n_unscored: usize,
    /// Names of subsets that were empty (or too small to correlate).
    pub flagged: Vec<String>,
}

/// True when both words' most frequent WordNet part of speech is noun.
pub fn is_noun_noun(g: &SynsetGraph, w1: &str, w2: &str) -> bool {
    g.majority_pos(w1) == Some(Pos::Noun) && g.majority_pos(w2) == Some(Pos::Noun)
}

/// Correlations on noun–noun pairs, on all other pairs, and overall.
pub fn pos_split_eval(scorer: &dyn PairScorer, test: &[ScoredPair], g: &SynsetGraph) -> Result<PosSplitReport> {
    let pairs: Vec<(String, String)> = test.iter().map(|p| (p.w1.clone(), p.w2.clone())).collect();
    let scores = scorer.score_batch(&pairs)?;
    let rows: Vec<BenchmarkRow> = test
        .iter()
        .map(|p| BenchmarkRow {
            w1: p.w1.clone(),
            w2: p.w2.clone(),
            sim: Some(p.sim),
            rel: Some(p.rel),
        })
        .collect();
    let mut parts: [(Vec<(f64, f64)>, Vec<&BenchmarkRow>); 3] = Default::default();
    let mut unscored = 0;
    for (row, s) in rows.iter().zip(&scores) {
        let Some(s) = s else {
            unscored += 1;
            continue;
        };
        let k = if is_noun_noun(g, &row.w1, &row.w2) { 0 } else { 1 };
        parts[k].0.push(*s);
        parts[k].1.push(row);
        parts[2].0.push(*s);
        parts[2].1.push(row);
    }
    if parts[2].0.len() < 3 {
        return Err(Error::InvalidInput("fewer than three scorable test pairs".into()));
    }
    let mut flagged = Vec::new();
    let mut subset = |k: usize, name: &str| {
        if parts[k].0.len() < 3 {
            flagged.push(name.to_string());
            None
        } else {
            Some(correlate(scorer.name(), &parts[k].0, &parts[k].1))
        }
    };
    let noun_noun = subset(0, "noun-noun");
    let other = subset(1, "other");
    Ok(PosSplitReport {
        noun_noun,
        other,
        overall: correlate(scorer.name(), &parts[2].0, &parts[2].1),
        n_noun_noun: parts[0].0.len(),
        n_other: parts[1].0.len(),
        n_unscored: unscored,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    struct Table(Vec<((&'static str, &'static str), (f64, f64))>);

    impl PairScorer for Table {
        fn name(&self) -> &str {
            "table"
        }
        fn score_batch(&self, pairs: &[(String, String)]) -> Result<Vec<Option<(f64, f64)>>> {
            Ok(pairs
                .iter()
                .map(|(a, b)| self.0.iter().find(|((x, y), _)| x == a && y == b).map(|(_, s)| *s))
                .collect())
        }
    }

    #[test]
    fn loader_rescales_and_keeps_missing_cells() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "w1\tw2\tsim\trel\ncoffee\tmug\t1\t7\nCat\tdog\t6\tNA\ncar\tauto\t7\t1\n").unwrap();
        let fmt = BenchmarkFormat {
            sim_scale: Some([1.0, 7.0]),
            ..Default::default()
        };
        let b = load_benchmark(f.path(), "toy", &fmt).unwrap();
        assert_eq!(b.rows.len(), 3);
        assert_eq!(b.rows[0].sim, Some(0.0));
        assert_eq!(b.rows[1].w1, "cat");
        assert!((b.rows[1].sim.unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(b.rows[1].rel, None);
        assert_eq!(b.rows[0].rel, Some(1.0));
        assert_eq!(b.rows[2].rel, Some(0.0));
    }

    #[test]
    fn three_row_benchmark_equals_direct_spearman() {
        let bench = Benchmark {
            name: "tiny".into(),
            rows: vec![
                BenchmarkRow { w1: "a".into(), w2: "b".into(), sim: Some(0.1), rel: Some(0.9) },
                BenchmarkRow { w1: "a".into(), w2: "c".into(), sim: Some(0.5), rel: Some(0.2) },
                BenchmarkRow { w1: "b".into(), w2: "c".into(), sim: Some(0.9), rel: Some(0.4) },
            ],
        };
        let m = Table(vec![(("a", "b"), (0.5, 0.25)), (("a", "c"), (0.25, 0.75)), (("b", "c"), (0.75, 0.5))]);
        let r = evaluate(&bench, &[&m]).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.rho_sim.unwrap(), spearman(&[0.5, 0.25, 0.75], &[0.1, 0.5, 0.9]).unwrap());
        assert_eq!(row.rho_rel.unwrap(), spearman(&[0.25, 0.75, 0.5], &[0.9, 0.2, 0.4]).unwrap());
        assert_eq!(row.rho_gap.unwrap(), spearman(&[0.25, -0.5, 0.25], &[-0.8, 0.3, 0.5]).unwrap());
    }

    #[test]
    fn uncovered_rows_are_dropped_and_counted() {
        let rows: Vec<BenchmarkRow> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|w| BenchmarkRow { w1: "x".into(), w2: w.to_string(), sim: Some(w.len() as f64 / 10.0), rel: None })
            .collect();
        let bench = Benchmark { name: "t".into(), rows };
        let m = Table(vec![(("x", "a"), (0.1, 0.0)), (("x", "b"), (0.2, 0.0)), (("x", "c"), (0.3, 0.0)), (("x", "d"), (0.4, 0.0))]);
        let r = evaluate(&bench, &[&m]).unwrap();
        assert_eq!((r.n_used, r.n_dropped, r.n_total), (4, 1, 5));
        assert_eq!(r.rows[0].rho_rel, None);
        let m2 = Table(vec![(("x", "a"), (0.1, 0.0))]);
        assert!(evaluate(&bench, &[&m2]).is_err());
    }
}
