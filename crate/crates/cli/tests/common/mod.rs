#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simrel::fixtures::{heuristic_pairs, World, WorldPaths, WorldSpec};
use simrel::pairs::{ScoredPair, Source};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_simrel"))
}

pub fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("spawn simrel")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// Synthetic resource bundle written to `dir/world`.
pub fn synthetic_world(dir: &Path, dim: usize) -> WorldPaths {
    let spec = WorldSpec {
        embedding_dim: dim,
        ..WorldSpec::default()
    };
    World::generate(&spec).write(&dir.join("world")).expect("write world")
}

fn toml_path(p: &Path) -> String {
    format!("{:?}", p.display().to_string())
}

/// `[resources]` section pointing at a synthetic bundle.
pub fn resources_section(w: &WorldPaths) -> String {
    format!(
        "[resources]\nembeddings = {}\nembedding_name = \"synthetic\"\nwordnet = {}\nconceptnet = {}\nfrequencies = {}\nlexicon = {}\n",
        toml_path(&w.embeddings),
        toml_path(&w.wordnet),
        toml_path(&w.conceptnet),
        toml_path(&w.frequencies),
        toml_path(&w.lexicon)
    )
}

pub fn small_quotas(n: usize) -> String {
    let mut s = String::from("[curation.quotas]\n");
    for src in Source::ALL {
        s.push_str(&format!("\"{}\" = {n}\n", src.as_str()));
    }
    s
}

pub fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

/// Heuristic-label dataset over the bundle, written as JSONL.
pub fn write_heuristic_dataset(w: &WorldPaths, n: usize, seed: u64, path: &Path) -> Vec<ScoredPair> {
    let res = w.resources().unwrap();
    let data = heuristic_pairs(&res, n, seed);
    simrel::jsonl::write(path, &data).unwrap();
    data
}

pub fn toml_str(p: &Path) -> String {
    toml_path(p)
}
