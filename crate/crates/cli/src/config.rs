//! TOML run configuration. Relative paths are resolved against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use simrel::annotate::EndpointConfig;
use simrel::curation::CurationConfig;
use simrel::embed::EmbeddingFormat;
use simrel::evalbench::BenchmarkFormat;
use simrel::scorer::TrainingConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
    /// When set (or given as `--seed`), replaces every section's seed.
    pub seed: Option<u64>,
    /// When set (or given as `--workers`), replaces every section's worker count.
    pub workers: Option<usize>,
    pub resources: ResourceConfig,
    pub curation: CurationConfig,
    pub paths: StagePaths,
    pub annotation: EndpointConfig,
    pub training: TrainingConfig,
    pub eval: EvalConfig,
    pub atlas: AtlasConfig,
    pub downstream: DownstreamConfig,
    pub regress: RegressConfig,
    pub scaling: ScalingConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub embeddings: Option<PathBuf>,
    pub embedding_format: EmbeddingFormat,
    pub embedding_name: Option<String>,
    pub wordnet: Option<PathBuf>,
    /// Information-content file; otherwise the database's own tag counts.
    pub ic: Option<PathBuf>,
    pub conceptnet: Option<PathBuf>,
    pub frequencies: Option<PathBuf>,
    /// Word list the curation vocabulary is drawn from.
    pub lexicon: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
}

/// Files passed between stages. Each defaults to a fixed name under the
/// output directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StagePaths {
    /// Candidate pairs read by `annotate` (`candidates.jsonl`).
    pub candidates: Option<PathBuf>,
    /// Prompt template file; the built-in template otherwise.
    pub template: Option<PathBuf>,
    /// Annotated pairs read by `train` and `scaling` (`dataset.jsonl`).
    pub dataset: Option<PathBuf>,
    /// Checkpoint read by `eval` and `score` (`model.ckpt`).
    pub model: Option<PathBuf>,
    /// Held-out pairs for the part-of-speech split (`test_pairs.jsonl`).
    pub test_pairs: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: BenchmarkFormat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub benchmarks: Vec<BenchmarkEntry>,
    /// Include the cosine and WordNet baselines next to the model.
    pub baselines: bool,
    pub polysemy: bool,
    /// Probe clusters; built from WordNet and ConceptNet when absent.
    pub probes: Option<PathBuf>,
    pub probe_words: usize,
    pub baseline_size: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            benchmarks: Vec::new(),
            baselines: true,
            polysemy: false,
            probes: None,
            probe_words: 50,
            baseline_size: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    pub runs: Option<PathBuf>,
    pub top_n: usize,
    /// Random-word topics per corpus.
    pub baseline_topics: usize,
    pub permutations: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            runs: None,
            top_n: 5,
            baseline_topics: 200,
            permutations: 10_000,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub doc_topics: PathBuf,
    pub sidecar: PathBuf,
    pub labels: Option<PathBuf>,
    pub topic_words: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownstreamConfig {
    pub matrices: Vec<MatrixEntry>,
    /// Synonym pairs for the retrieval task; built-in list otherwise.
    pub synonyms: Option<PathBuf>,
    pub top_k: usize,
    pub k_nn: usize,
    pub workers: usize,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            matrices: Vec::new(),
            synonyms: None,
            top_k: 10,
            k_nn: 10,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressConfig {
    pub table: Option<PathBuf>,
    pub predictors: Vec<String>,
    pub outcomes: Vec<String>,
    /// Outcome name to grouping column for fixed-effects fits.
    pub fixed_effects: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub fractions: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.1, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn rebase_req(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn rebase(&mut self, base: &Path) {
        rebase(base, &mut self.output);
        let r = &mut self.resources;
        for p in [
            &mut r.embeddings,
            &mut r.wordnet,
            &mut r.ic,
            &mut r.conceptnet,
            &mut r.frequencies,
            &mut r.lexicon,
            &mut r.exclusions,
        ] {
            rebase(base, p);
        }
        let sp = &mut self.paths;
        for p in [&mut sp.candidates, &mut sp.template, &mut sp.dataset, &mut sp.model, &mut sp.test_pairs] {
            rebase(base, p);
        }
        rebase(base, &mut self.eval.probes);
        for b in &mut self.eval.benchmarks {
            rebase_req(base, &mut b.path);
        }
        rebase(base, &mut self.atlas.runs);
        rebase(base, &mut self.downstream.synonyms);
        for m in &mut self.downstream.matrices {
            rebase_req(base, &mut m.doc_topics);
            rebase_req(base, &mut m.sidecar);
            rebase(base, &mut m.labels);
            rebase(base, &mut m.topic_words);
        }
        rebase(base, &mut self.regress.table);
    }

    /// Applies the global seed and worker overrides to every section.
    pub fn apply_overrides(&mut self, seed: Option<u64>, workers: Option<usize>) {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.curation.seed = s;
            self.training.seed = s;
            self.eval.seed = s;
            self.atlas.seed = s;
        }
        if let Some(w) = workers.or(self.workers) {
            self.workers = Some(w);
            self.curation.workers = w;
            self.training.workers = w;
            self.atlas.workers = w;
            self.downstream.workers = w;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.curation.validate().map_err(|e| e.to_string())?;
        self.annotation.validate().map_err(|e| e.to_string())?;
        self.training.validate().map_err(|e| e.to_string())?;
        if self.workers == Some(0) {
            return Err("workers must be positive".into());
        }
        if self.atlas.top_n < 2 || self.atlas.baseline_topics == 0 || self.atlas.workers == 0 {
            return Err("atlas: top_n must be >= 2, baseline_topics and workers positive".into());
        }
        if self.downstream.top_k == 0 || self.downstream.k_nn == 0 || self.downstream.workers == 0 {
            return Err("downstream: top_k, k_nn and workers must be positive".into());
        }
        if self.scaling.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err("scaling: fractions must lie in (0, 1]".into());
        }
        if self.eval.baseline_size < 2 {
            return Err("eval: baseline_size must be >= 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid_defaults() {
        let c = Config::parse("", Path::new("/base")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.atlas.top_n, 5);
        assert_eq!(c.eval.baseline_size, 200);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("bogus = 1", Path::new(".")).is_err());
        assert!(Config::parse("[training]\nlearning_rate = 1.0", Path::new(".")).is_err());
        assert!(Config::parse("[atlas]\ntopn = 3", Path::new(".")).is_err());
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let c = Config::parse(
            "[resources]\nwordnet = \"wn\"\nembeddings = \"/abs/e.txt\"\n[[downstream.matrices]]\ndoc_topics = \"m.csv\"\nsidecar = \"m.json\"",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.resources.wordnet.unwrap(), PathBuf::from("/cfg/wn"));
        assert_eq!(c.resources.embeddings.unwrap(), PathBuf::from("/abs/e.txt"));
        assert_eq!(c.downstream.matrices[0].doc_topics, PathBuf::from("/cfg/m.csv"));
    }

    #[test]
    fn overrides_reach_every_section() {
        let mut c = Config::parse("seed = 3\n[training]\nseed = 9", Path::new(".")).unwrap();
        c.apply_overrides(None, Some(4));
        assert_eq!((c.training.seed, c.curation.seed, c.atlas.seed), (3, 3, 3));
        assert_eq!((c.training.workers, c.downstream.workers), (4, 4));
        c.apply_overrides(Some(11), None);
        assert_eq!(c.eval.seed, 11);
    }

    #[test]
    fn nested_sections_parse() {
        let c = Config::parse(
            "[annotation]\nurl = \"http://localhost:1/v1\"\nconcurrency = 2\n[training]\nmax_epochs = 3\nsplit_mode = \"word-heldout\"",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.annotation.concurrency, 2);
        assert_eq!(c.training.max_epochs, 3);
    }
}
