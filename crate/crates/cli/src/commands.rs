//! Subcommand bodies. Each reads its inputs, writes its outputs under the
//! output directory and returns a one-line summary.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use simrel::annotate::{annotate_batch, load_cache, PromptTemplate, DEFAULT_TEMPLATE};
use simrel::atlas::{self, Axis, Baseline, TopicScore};
use simrel::curation::{self, CurationInputs};
use simrel::downstream::{self, DocTopicMatrix, TopicWordMatrix};
use simrel::embed::{load_embeddings, load_frequencies, EmbeddingTable, LoadOptions};
use simrel::evalbench::{self, PolysemyConfig};
use simrel::lexnet::{parse_conceptnet, parse_wordnet, Lexicon};
use simrel::pairs::{CandidatePair, ScoredPair};
use simrel::scorer::{
    load_checkpoint, save_checkpoint, train as train_model, CosineBaseline, NeuralScorer, PairScorer, Resources,
    ScorerModel, WordnetBaseline, WordnetMeasure,
};
use simrel::{jsonl, Error};

use crate::config::Config;

#[derive(Debug)]
pub enum CliError {
    /// Bad or incomplete configuration; exit code 2.
    Config(String),
    /// Failure inside a pipeline stage; exit code 1.
    Module(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Module(e)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::InvalidInput(_) => "invalid_input",
        Error::OutOfVocabulary(_) => "out_of_vocabulary",
        Error::ZeroNorm => "zero_norm",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::Undefined(_) => "undefined",
        Error::Checkpoint(_) => "checkpoint",
        Error::ConfigMismatch(_) => "config_mismatch",
        Error::Diverged(_) => "diverged",
        Error::Annotation(_) => "annotation",
        Error::Json(_) => "json",
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Module(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let v = match self {
            CliError::Config(m) => json!({"error": "config", "kind": "config", "message": m}),
            CliError::Module(e) => json!({"error": "module", "kind": error_kind(e), "message": e.to_string()}),
        };
        v.to_string()
    }
}

type CliResult<T> = Result<T, CliError>;

pub struct Context {
    pub cfg: Config,
    pub out: PathBuf,
    pub dry_run: bool,
}

impl Context {
    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn atlas_dir(&self) -> PathBuf {
        self.out.join("atlas")
    }

    fn ensure_out(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::Module(io_err(dir, e)))
    }

    fn candidates(&self) -> PathBuf {
        self.cfg.paths.candidates.clone().unwrap_or_else(|| self.out_file("candidates.jsonl"))
    }

    fn dataset(&self) -> PathBuf {
        self.cfg.paths.dataset.clone().unwrap_or_else(|| self.out_file("dataset.jsonl"))
    }

    fn model(&self) -> PathBuf {
        self.cfg.paths.model.clone().unwrap_or_else(|| self.out_file("model.ckpt"))
    }

    fn test_pairs(&self) -> PathBuf {
        self.cfg.paths.test_pairs.clone().unwrap_or_else(|| self.out_file("test_pairs.jsonl"))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Config(format!("`{key}` must be set for this command")))
}

/// Inputs must exist before a stage starts; a missing one is a module
/// error, not a configuration error.
fn must_exist(p: &Path) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::Module(io_err(p, std::io::Error::from(std::io::ErrorKind::NotFound))))
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Module(io_err(path, e)))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    write_text(path, &s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Module(io_err(path, e)))?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

fn dry(ctx: &Context, what: &str, inputs: &[&Path]) -> CliResult<String> {
    for p in inputs {
        must_exist(p)?;
    }
    Ok(format!(
        "dry run: {what} would write to {} ({} inputs present)",
        ctx.out.display(),
        inputs.len()
    ))
}

fn embedding_name(ctx: &Context, path: &Path) -> String {
    ctx.cfg.resources.embedding_name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "embeddings".into())
    })
}

fn load_table(ctx: &Context, restrict: Option<HashSet<String>>) -> CliResult<EmbeddingTable> {
    let path = required(&ctx.cfg.resources.embeddings, "resources.embeddings")?;
    let opts = LoadOptions {
        format: ctx.cfg.resources.embedding_format,
        name: embedding_name(ctx, path),
        restrict_to: restrict,
        ..LoadOptions::default()
    };
    let (table, report) = load_embeddings(path, &opts)?;
    log::info!("embeddings: {} loaded, {} skipped", report.loaded, report.skipped());
    Ok(table)
}

fn load_lexicon(ctx: &Context) -> CliResult<Lexicon> {
    let dir = required(&ctx.cfg.resources.wordnet, "resources.wordnet")?;
    Ok(Lexicon::load(dir, ctx.cfg.resources.ic.as_deref())?)
}

/// Resources matching a checkpoint's feature layout.
fn model_resources(ctx: &Context, model: &ScorerModel, restrict: Option<HashSet<String>>) -> CliResult<Resources> {
    let table = load_table(ctx, restrict)?;
    if table.dimension() != model.config.embedding_dim {
        return Err(CliError::Module(Error::DimensionMismatch {
            expected: model.config.embedding_dim,
            got: table.dimension(),
        }));
    }
    if table.name() != model.config.embedding {
        log::warn!("checkpoint was trained on {:?}, scoring with {:?}", model.config.embedding, table.name());
    }
    let lexicon = if model.config.use_wordnet {
        Some(load_lexicon(ctx)?)
    } else {
        None
    };
    Ok(Resources::new(table, lexicon))
}

fn words_of<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> HashSet<String> {
    pairs
        .into_iter()
        .flat_map(|(a, b)| [a.to_string(), b.to_string()])
        .collect()
}

pub fn curate(ctx: &Context) -> CliResult<String> {
    let r = &ctx.cfg.resources;
    let wordnet = required(&r.wordnet, "resources.wordnet")?;
    let conceptnet = required(&r.conceptnet, "resources.conceptnet")?;
    let embeddings = required(&r.embeddings, "resources.embeddings")?;
    let frequencies = required(&r.frequencies, "resources.frequencies")?;
    let lexicon = required(&r.lexicon, "resources.lexicon")?;
    if ctx.dry_run {
        let mut inputs = vec![wordnet, conceptnet, embeddings, frequencies, lexicon];
        if let Some(x) = r.exclusions.as_deref() {
            inputs.push(x);
        }
        return dry(ctx, "curate", &inputs);
    }
    let (graph, _) = parse_wordnet(wordnet)?;
    let words = curation::load_word_list(lexicon)?;
    let vocab = curation::build_vocabulary(&graph, &words)?;
    let table = load_table(ctx, Some(vocab.iter().cloned().collect()))?;
    let (edges, _) = parse_conceptnet(conceptnet)?;
    let freq = load_frequencies(frequencies)?;
    let exclusions = match r.exclusions.as_deref() {
        Some(p) => curation::load_exclusions(p)?,
        None => BTreeSet::new(),
    };
    let inputs = CurationInputs {
        vocab: &vocab,
        graph: &graph,
        edges: &edges,
        table: &table,
        freq: &freq,
        exclusions: &exclusions,
    };
    let (pairs, report) = curation::curate(&inputs, &ctx.cfg.curation)?;
    ctx.ensure_out(&ctx.out)?;
    jsonl::write(&ctx.out_file("candidates.jsonl"), &pairs)?;
    write_json(&ctx.out_file("curation_report.json"), &report)?;
    Ok(format!(
        "curate: {} candidate pairs from a vocabulary of {} words{}",
        pairs.len(),
        vocab.len(),
        if report.partial { " (partial: some sources fell short)" } else { "" }
    ))
}

pub fn annotate(ctx: &Context) -> CliResult<String> {
    let input = ctx.candidates();
    let cache = ctx.out_file("annotations.cache.jsonl");
    let template = match &ctx.cfg.paths.template {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Module(io_err(p, e)))?;
            PromptTemplate::new(text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => PromptTemplate::new(DEFAULT_TEMPLATE)?,
    };
    let endpoint = ctx.cfg.annotation.clone().with_env_key();
    if ctx.dry_run {
        must_exist(&input)?;
        let pairs: Vec<CandidatePair> = jsonl::read(&input)?;
        let cached = load_cache(&cache)?;
        let todo = pairs
            .iter()
            .filter(|p| !cached.contains_key(&(p.w1.clone(), p.w2.clone())))
            .count();
        return Ok(format!(
            "dry run: annotate would send {todo} of {} pairs to {} ({} cached)",
            pairs.len(),
            endpoint.url,
            pairs.len() - todo
        ));
    }
    let pairs: Vec<CandidatePair> = jsonl::read(&input)?;
    ctx.ensure_out(&ctx.out)?;
    let outcome = annotate_batch(&pairs, &endpoint, &template, &cache)?;
    jsonl::write(&ctx.out_file("dataset.jsonl"), &outcome.scored)?;
    write_json(&ctx.out_file("annotation_stats.json"), &outcome.stats)?;
    Ok(format!(
        "annotate: {} scored, {} from cache, {} quarantined, {} requests",
        outcome.scored.len(),
        outcome.stats.cache_hits,
        outcome.quarantined.len(),
        outcome.stats.requests
    ))
}

fn training_resources(ctx: &Context, dataset: &[ScoredPair], use_wordnet: bool) -> CliResult<Resources> {
    let table = load_table(ctx, Some(words_of(dataset.iter().map(|p| (p.w1.as_str(), p.w2.as_str())))))?;
    let lexicon = if use_wordnet { Some(load_lexicon(ctx)?) } else { None };
    Ok(Resources::new(table, lexicon))
}

pub fn train(ctx: &Context) -> CliResult<String> {
    let data = ctx.dataset();
    let tc = &ctx.cfg.training;
    if ctx.dry_run {
        required(&ctx.cfg.resources.embeddings, "resources.embeddings")?;
        if tc.use_wordnet {
            required(&ctx.cfg.resources.wordnet, "resources.wordnet")?;
        }
        return dry(ctx, "train", &[&data]);
    }
    let dataset: Vec<ScoredPair> = jsonl::read(&data)?;
    let res = training_resources(ctx, &dataset, tc.use_wordnet)?;
    let outcome = train_model(&dataset, tc, &res)?;
    ctx.ensure_out(&ctx.out)?;
    save_checkpoint(&outcome.model, &ctx.out_file("model.ckpt"))?;
    write_text(&ctx.out_file("training_log.csv"), &outcome.log.to_csv())?;
    write_json(&ctx.out_file("train_summary.json"), &outcome.summary)?;
    let test: Vec<&ScoredPair> = outcome.splits[2].iter().map(|&i| &dataset[i]).collect();
    jsonl::write(&ctx.out_file("test_pairs.jsonl"), test)?;
    let s = &outcome.summary;
    Ok(format!(
        "train: {} epochs (best {}), test spearman sim {:.4} rel {:.4} on {} pairs",
        s.epochs_run, s.best_epoch, s.test.spearman_sim, s.test.spearman_rel, s.test.n
    ))
}

#[derive(Serialize)]
struct EvalReport {
    model: String,
    benchmarks: Vec<evalbench::CorrelationResult>,
    pos_split: Option<evalbench::PosSplitReport>,
    polysemy: Option<evalbench::PolysemyReport>,
}

pub fn eval(ctx: &Context) -> CliResult<String> {
    let ec = &ctx.cfg.eval;
    let model_path = ctx.model();
    let test_path = ctx.test_pairs();
    if ctx.dry_run {
        let mut inputs: Vec<&Path> = vec![&model_path];
        inputs.extend(ec.benchmarks.iter().map(|b| b.path.as_path()));
        return dry(ctx, "eval", &inputs);
    }
    let model = load_checkpoint(&model_path)?;
    let benches = ec
        .benchmarks
        .iter()
        .map(|b| evalbench::load_benchmark(&b.path, &b.name, &b.format))
        .collect::<Result<Vec<_>, _>>()?;
    let test: Option<Vec<ScoredPair>> = if test_path.exists() {
        Some(jsonl::read(&test_path)?)
    } else {
        None
    };
    // Polysemy baselines draw from the whole vocabulary, so only restrict the
    // table when that test is off.
    let restrict = if ec.polysemy {
        None
    } else {
        let mut w = words_of(benches.iter().flat_map(|b| b.rows.iter().map(|r| (r.w1.as_str(), r.w2.as_str()))));
        if let Some(t) = &test {
            w.extend(words_of(t.iter().map(|p| (p.w1.as_str(), p.w2.as_str()))));
        }
        Some(w)
    };
    let res = model_resources(ctx, &model, restrict)?;
    let lexicon = match &res.lexicon {
        Some(_) => None,
        None if ctx.cfg.resources.wordnet.is_some() => Some(load_lexicon(ctx)?),
        None => None,
    };
    let graph = res.lexicon.as_ref().or(lexicon.as_ref()).map(|l| &l.graph);

    let neural = NeuralScorer {
        model: &model,
        resources: &res,
    };
    let cosine = CosineBaseline { table: &res.table };
    let mut methods: Vec<&dyn PairScorer> = vec![&neural];
    let wn: Vec<WordnetBaseline> = match (ec.baselines, graph) {
        (true, Some(g)) => [WordnetMeasure::Path, WordnetMeasure::WuPalmer]
            .into_iter()
            .map(|measure| WordnetBaseline { graph: g, measure })
            .collect(),
        _ => Vec::new(),
    };
    if ec.baselines {
        methods.push(&cosine);
        methods.extend(wn.iter().map(|w| w as &dyn PairScorer));
    }
    let benchmarks = benches
        .iter()
        .map(|b| evalbench::evaluate(b, &methods))
        .collect::<Result<Vec<_>, _>>()?;

    let pos_split = match (&test, graph) {
        (Some(t), Some(g)) => Some(evalbench::pos_split_eval(&neural, t, g)?),
        _ => None,
    };

    let polysemy = if ec.polysemy {
        let g = graph.ok_or_else(|| CliError::Config("eval.polysemy needs resources.wordnet".into()))?;
        let probes = match &ec.probes {
            Some(p) => evalbench::load_probes(p)?,
            None => {
                let cn = required(&ctx.cfg.resources.conceptnet, "resources.conceptnet")?;
                let (edges, _) = parse_conceptnet(cn)?;
                evalbench::build_probes(g, Some(&edges), |w| res.table.contains(w), ec.probe_words, ec.seed)
            }
        };
        let pool: Vec<String> = res.table.words().iter().filter(|w| g.contains(w)).cloned().collect();
        let cfg = PolysemyConfig {
            baseline_size: ec.baseline_size,
            seed: ec.seed,
        };
        Some(evalbench::polysemy_test(&neural, &probes, &pool, &cfg)?)
    } else {
        None
    };

    ctx.ensure_out(&ctx.out)?;
    let report = EvalReport {
        model: model_path.display().to_string(),
        benchmarks,
        pos_split,
        polysemy,
    };
    write_json(&ctx.out_file("eval.json"), &report)?;
    if let Some(p) = &report.polysemy {
        write_text(&ctx.out_file("polysemy.csv"), &p.to_csv())?;
    }
    let mut line = format!("eval: {} benchmarks", report.benchmarks.len());
    if let Some(p) = &report.pos_split {
        let _ = write!(line, ", test split {} noun-noun / {} other", p.n_noun_noun, p.n_other);
    }
    if let Some(p) = &report.polysemy {
        let _ = write!(line, ", {} polysemy clusters", p.clusters.len());
    }
    Ok(line)
}

fn read_pair_list(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Module(io_err(path, e)))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        match (f.next(), f.next()) {
            (Some(a), Some(b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                out.push((a.trim().to_lowercase(), b.trim().to_lowercase()))
            }
            _ => {
                return Err(CliError::Module(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected two tab-separated words".into(),
                }))
            }
        }
    }
    Ok(out)
}

pub fn score(ctx: &Context, pairs_path: &Path) -> CliResult<String> {
    let model_path = ctx.model();
    if ctx.dry_run {
        return dry(ctx, "score", &[&model_path, pairs_path]);
    }
    let pairs = read_pair_list(pairs_path)?;
    let model = load_checkpoint(&model_path)?;
    let res = model_resources(ctx, &model, Some(words_of(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())))))?;
    let scorer = NeuralScorer {
        model: &model,
        resources: &res,
    };
    let scores = scorer.score_batch(&pairs)?;
    let mut s = String::from("w1\tw2\tsim\trel\n");
    let mut missing = 0;
    for ((a, b), sc) in pairs.iter().zip(&scores) {
        match sc {
            Some((x, y)) => {
                let _ = writeln!(s, "{a}\t{b}\t{x:.6}\t{y:.6}");
            }
            None => {
                missing += 1;
                let _ = writeln!(s, "{a}\t{b}\tNA\tNA");
            }
        }
    }
    ctx.ensure_out(&ctx.out)?;
    write_text(&ctx.out_file("scores.tsv"), &s)?;
    Ok(format!("score: {} pairs scored, {missing} out of vocabulary", pairs.len() - missing))
}

pub fn atlas_score(ctx: &Context) -> CliResult<String> {
    let ac = &ctx.cfg.atlas;
    let runs_path = required(&ac.runs, "atlas.runs")?;
    let model_path = ctx.model();
    if ctx.dry_run {
        return dry(ctx, "atlas score", &[runs_path, &model_path]);
    }
    let runs = atlas::ingest_runs(runs_path)?;
    let model = load_checkpoint(&model_path)?;
    let mut corpus_words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &runs {
        let set = corpus_words.entry(r.corpus.clone()).or_default();
        for t in &r.topics {
            set.extend(t.iter().cloned());
        }
    }
    let all: HashSet<String> = corpus_words.values().flatten().cloned().collect();
    let res = model_resources(ctx, &model, Some(all))?;
    let scorer = NeuralScorer {
        model: &model,
        resources: &res,
    };
    let scored = atlas::score_runs(&scorer, &runs, ac.top_n, ac.workers)?;
    let mut baseline = Vec::new();
    for (corpus, words) in &corpus_words {
        let vocab: Vec<String> = words.iter().cloned().collect();
        baseline.extend(atlas::random_baseline(&scorer, corpus, &vocab, ac.baseline_topics, ac.top_n, ac.seed)?);
    }
    let dir = ctx.atlas_dir();
    ctx.ensure_out(&dir)?;
    jsonl::write(&dir.join("scored.jsonl"), &scored)?;
    jsonl::write(&dir.join("baseline.jsonl"), &baseline)?;
    let unscored = scored.iter().filter(|s| !s.is_scored()).count();
    Ok(format!(
        "atlas score: {} topics from {} runs ({unscored} unscored), {} baseline topics over {} corpora",
        scored.len(),
        runs.len(),
        baseline.len(),
        corpus_words.len()
    ))
}

fn read_scores(path: &Path) -> CliResult<Vec<TopicScore>> {
    must_exist(path)?;
    Ok(jsonl::read(path)?)
}

pub fn atlas_normalize(ctx: &Context) -> CliResult<String> {
    let dir = ctx.atlas_dir();
    let (scored, baseline) = (dir.join("scored.jsonl"), dir.join("baseline.jsonl"));
    if ctx.dry_run {
        return dry(ctx, "atlas normalize", &[&scored, &baseline]);
    }
    let mut all = read_scores(&scored)?;
    let n_runs = all.len();
    all.extend(read_scores(&baseline)?);
    let reports = atlas::normalize(&mut all)?;
    let baselines: BTreeMap<String, Baseline> = reports
        .iter()
        .map(|r| Ok((r.corpus.clone(), atlas::baseline_of(&all, &r.corpus)?)))
        .collect::<Result<_, Error>>()?;
    jsonl::write(&dir.join("normalized.jsonl"), &all)?;
    write_json(&dir.join("baselines.json"), &baselines)?;
    write_json(&dir.join("normalization.json"), &reports)?;
    let constant = reports.iter().filter(|r| !r.constant.is_empty()).count();
    Ok(format!(
        "atlas normalize: {n_runs} run topics and {} baseline topics over {} corpora ({constant} with a constant axis)",
        all.len() - n_runs,
        reports.len()
    ))
}

fn load_summaries(ctx: &Context) -> CliResult<BTreeMap<String, Vec<atlas::ModelSummary>>> {
    let dir = ctx.atlas_dir();
    let scores = read_scores(&dir.join("normalized.jsonl"))?;
    let bpath = dir.join("baselines.json");
    must_exist(&bpath)?;
    let baselines: BTreeMap<String, Baseline> = read_json(&bpath)?;
    Ok(atlas::summarize(&scores, &baselines)?)
}

pub fn atlas_concordance(ctx: &Context) -> CliResult<String> {
    let dir = ctx.atlas_dir();
    if ctx.dry_run {
        return dry(ctx, "atlas concordance", &[&dir.join("normalized.jsonl"), &dir.join("baselines.json")]);
    }
    let summaries = load_summaries(ctx)?;
    let ac = &ctx.cfg.atlas;
    let results = Axis::ALL
        .iter()
        .map(|&axis| atlas::concordance(&summaries, axis, ac.permutations, ac.seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_json(&dir.join("summaries.json"), &summaries)?;
    write_json(&dir.join("concordance.json"), &results)?;
    let parts: Vec<String> = results
        .iter()
        .map(|r| format!("{:?} W={:.3} p={:.3}", r.axis, r.w, r.p))
        .collect();
    Ok(format!("atlas concordance: {}", parts.join(", ")))
}

pub fn atlas_export(ctx: &Context) -> CliResult<String> {
    let dir = ctx.atlas_dir();
    if ctx.dry_run {
        return dry(ctx, "atlas export", &[&dir.join("normalized.jsonl"), &dir.join("baselines.json")]);
    }
    let summaries = load_summaries(ctx)?;
    let files = atlas::export_atlas(&dir, &summaries)?;
    Ok(format!("atlas export: {} files for {} corpora", files.len(), summaries.len()))
}

#[derive(Serialize)]
struct DownstreamRecord {
    corpus: String,
    model: String,
    task_a: Option<downstream::TaskAResult>,
    task_b: Option<f64>,
    task_c: Option<downstream::TaskCResult>,
}

pub fn downstream(ctx: &Context) -> CliResult<String> {
    let dc = &ctx.cfg.downstream;
    if dc.matrices.is_empty() {
        return Err(CliError::Config("`downstream.matrices` lists no matrices".into()));
    }
    if ctx.dry_run {
        let mut inputs: Vec<&Path> = Vec::new();
        for m in &dc.matrices {
            inputs.extend([m.doc_topics.as_path(), m.sidecar.as_path()]);
            inputs.extend(m.labels.as_deref());
            inputs.extend(m.topic_words.as_deref());
        }
        return dry(ctx, "downstream", &inputs);
    }
    let synonyms = match &dc.synonyms {
        Some(p) => downstream::load_synonym_pairs(p)?,
        None => downstream::default_synonym_pairs(),
    };
    let mut records = Vec::new();
    for m in &dc.matrices {
        let dt = DocTopicMatrix::load(&m.doc_topics, &m.sidecar)?;
        let (task_a, task_b) = match &m.labels {
            Some(p) => {
                let labels = downstream::load_labels(p)?;
                (
                    Some(downstream::task_a(&dt, &labels)?),
                    Some(downstream::task_b(&dt, &labels, dc.k_nn, dc.workers)?),
                )
            }
            None => (None, None),
        };
        let task_c = match &m.topic_words {
            Some(p) => {
                let tw = TopicWordMatrix::load(p)?;
                Some(downstream::task_c(&tw, &dt, &synonyms, dc.top_k)?)
            }
            None => None,
        };
        records.push(DownstreamRecord {
            corpus: dt.corpus.clone(),
            model: dt.model.clone(),
            task_a,
            task_b,
            task_c,
        });
    }
    ctx.ensure_out(&ctx.out)?;
    write_json(&ctx.out_file("downstream.json"), &records)?;
    Ok(format!("downstream: {} matrices evaluated", records.len()))
}

pub fn regress(ctx: &Context) -> CliResult<String> {
    let rc = &ctx.cfg.regress;
    let table_path = required(&rc.table, "regress.table")?;
    if rc.predictors.is_empty() || rc.outcomes.is_empty() {
        return Err(CliError::Config("`regress.predictors` and `regress.outcomes` must be non-empty".into()));
    }
    if ctx.dry_run {
        return dry(ctx, "regress", &[table_path]);
    }
    let table = downstream::RegressionTable::load(table_path)?;
    let mut rows = Vec::new();
    let mut csv = String::from("outcome,predictor,group,n,slope,r2,t,p\n");
    for outcome in &rc.outcomes {
        let group = rc.fixed_effects.get(outcome).map(String::as_str);
        for predictor in &rc.predictors {
            let r = downstream::regress(&table, predictor, outcome, group)?;
            let _ = writeln!(
                csv,
                "{outcome},{predictor},{},{},{},{},{},{}",
                group.unwrap_or(""),
                r.n,
                r.slope,
                r.r2,
                r.t,
                r.p
            );
            rows.push(json!({"outcome": outcome, "group": group, "fit": r}));
        }
    }
    ctx.ensure_out(&ctx.out)?;
    write_json(&ctx.out_file("regression.json"), &rows)?;
    write_text(&ctx.out_file("regression.csv"), &csv)?;
    Ok(format!("regress: {} fits on {} outcomes", rows.len(), rc.outcomes.len()))
}

pub fn scaling(ctx: &Context) -> CliResult<String> {
    let data = ctx.dataset();
    let fractions = &ctx.cfg.scaling.fractions;
    if fractions.is_empty() {
        return Err(CliError::Config("`scaling.fractions` is empty".into()));
    }
    if ctx.dry_run {
        required(&ctx.cfg.resources.embeddings, "resources.embeddings")?;
        return dry(ctx, "scaling", &[&data]);
    }
    let dataset: Vec<ScoredPair> = jsonl::read(&data)?;
    let res = training_resources(ctx, &dataset, ctx.cfg.training.use_wordnet)?;
    let mut csv = String::from("fraction,n_train,epochs_run,val_spearman_sim,val_spearman_rel,test_spearman_sim,test_spearman_rel\n");
    let mut summaries = Vec::new();
    for &f in fractions {
        let mut tc = ctx.cfg.training.clone();
        tc.subset_fraction = f;
        let s = train_model(&dataset, &tc, &res)?.summary;
        let _ = writeln!(
            csv,
            "{f},{},{},{:.6},{:.6},{:.6},{:.6}",
            s.n_train, s.epochs_run, s.val.spearman_sim, s.val.spearman_rel, s.test.spearman_sim, s.test.spearman_rel
        );
        summaries.push(json!({"fraction": f, "summary": s}));
    }
    ctx.ensure_out(&ctx.out)?;
    write_text(&ctx.out_file("scaling.csv"), &csv)?;
    write_json(&ctx.out_file("scaling.json"), &summaries)?;
    Ok(format!("scaling: {} subset sizes trained", fractions.len()))
}
