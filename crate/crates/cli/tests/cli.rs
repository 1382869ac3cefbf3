mod common;

use std::fs;

use common::*;
use serde_json::Value;
use simrel::atlas::TopicScore;
use simrel::scorer::{save_checkpoint, FeatureVariant, ModelConfig, ScorerModel};

#[test]
fn train_score_eval_on_heuristic_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let w = synthetic_world(dir.path(), 16);
    let data = write_heuristic_dataset(&w, 500, 3, &dir.path().join("dataset.jsonl"));
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &format!(
            "output = {}\n[paths]\ndataset = \"dataset.jsonl\"\n{}[training]\nmax_epochs = 5\nlr = 1e-3\n",
            toml_str(&out),
            resources_section(&w)
        ),
    );
    let o = run(&cfg, &["train"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("train: "), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    for f in ["model.ckpt", "training_log.csv", "train_summary.json", "test_pairs.jsonl"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let log = fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert!(log.lines().count() >= 2 && log.lines().count() <= 6);

    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, format!("{}\t{}\nqqqzzz\t{}\n", data[0].w1, data[0].w2, data[0].w1)).unwrap();
    let o = run(&cfg, &["score", pairs.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scores = fs::read_to_string(out.join("scores.tsv")).unwrap();
    let rows: Vec<&str> = scores.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].ends_with("\tNA\tNA"));
    let first: Vec<f64> = rows[1].split('\t').skip(2).map(|v| v.parse().unwrap()).collect();
    assert!(first.iter().all(|v| (0.0..=1.0).contains(v)));

    let bench = dir.path().join("bench.tsv");
    let mut text = String::from("w1\tw2\tsim\trel\n");
    for p in data.iter().take(60) {
        text.push_str(&format!("{}\t{}\t{}\t{}\n", p.w1, p.w2, p.sim * 10.0, p.rel * 10.0));
    }
    fs::write(&bench, text).unwrap();
    let mut body = fs::read_to_string(&cfg).unwrap();
    body.push_str(&format!(
        "[eval]\n[[eval.benchmarks]]\nname = \"heuristic\"\npath = {}\nformat = {{ sim_scale = [0.0, 10.0], rel_scale = [0.0, 10.0] }}\n",
        toml_str(&bench)
    ));
    let cfg2 = write_config(dir.path(), "eval.toml", &body);
    let o = run(&cfg2, &["eval"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    let methods: Vec<&str> = report["benchmarks"][0]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["neural", "cosine", "wn-path", "wn-wup"]);
    assert!(report["pos_split"].is_object());
}

#[test]
fn atlas_stages_on_two_run_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let runs = core_fixture("topic_runs.jsonl");
    let words: Vec<String> = fs::read_to_string(&runs)
        .unwrap()
        .lines()
        .flat_map(|l| serde_json::from_str::<Value>(l).unwrap()["topics"].as_array().unwrap().clone())
        .flat_map(|t| t.as_array().unwrap().clone())
        .map(|w| w.as_str().unwrap().to_lowercase())
        .collect();
    let mut emb = String::new();
    for (i, w) in words.iter().enumerate() {
        let v: Vec<String> = (0..8).map(|j| format!("{}", ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4)).collect();
        emb.push_str(&format!("{w} {}\n", v.join(" ")));
    }
    let emb_path = dir.path().join("emb.txt");
    fs::write(&emb_path, emb).unwrap();
    let model = ScorerModel::init(ModelConfig::new("emb", 8, FeatureVariant::Appendix, false, 1), 1);
    let ckpt = dir.path().join("model.ckpt");
    save_checkpoint(&model, &ckpt).unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "atlas.toml",
        &format!(
            "output = {}\n[resources]\nembeddings = {}\n[paths]\nmodel = {}\n[atlas]\nruns = {}\nbaseline_topics = 10\npermutations = 200\n",
            toml_str(&out),
            toml_str(&emb_path),
            toml_str(&ckpt),
            toml_str(&runs)
        ),
    );
    let o = run(&cfg, &["atlas", "score"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scored: Vec<TopicScore> = simrel::jsonl::read(&out.join("atlas/scored.jsonl")).unwrap();
    let baseline: Vec<TopicScore> = simrel::jsonl::read(&out.join("atlas/baseline.jsonl")).unwrap();
    assert_eq!(scored.len(), 4);
    assert!(scored.iter().all(|s| s.is_scored() && s.n_pairs_scored == 10 && !s.key.baseline));
    assert_eq!(scored[2].words[0], "oil");
    assert_eq!(baseline.len(), 10);
    assert!(baseline.iter().all(|s| s.key.baseline && s.key.model == "random"));

    let o = run(&cfg, &["atlas", "normalize"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let norm: Vec<TopicScore> = simrel::jsonl::read(&out.join("atlas/normalized.jsonl")).unwrap();
    assert_eq!(norm.len(), 14);
    let sims: Vec<f64> = norm.iter().map(|s| s.sim_norm.unwrap()).collect();
    assert!(sims.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(sims.contains(&0.0) && sims.contains(&1.0));

    let o = run(&cfg, &["atlas", "export"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("atlas/atlas_news.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);

    // two models are too few for a concordance
    let o = run(&cfg, &["atlas", "concordance"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_str(stderr(&o).trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "module");
    assert_eq!(err["kind"], "invalid_input");
}

#[test]
fn regress_matches_reference_fits() {
    let dir = tempfile::tempdir().unwrap();
    let x = [0.1, 0.4, 0.35, 0.8, 0.2, 0.5, 0.9, 0.3, 0.6, 0.75];
    let y = [1.0, 1.9, 1.7, 3.1, 0.2, 1.1, 2.4, 2.0, 2.9, 3.3];
    let g = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
    let mut csv = String::from("model,corpus,gap,task_c\n");
    for i in 0..10 {
        csv.push_str(&format!("m{i},g{},{},{}\n", g[i], x[i], y[i]));
    }
    csv.push_str("m10,g0,NA,1.0\n");
    fs::write(dir.path().join("table.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        "r.toml",
        "output = \"out\"\n[regress]\ntable = \"table.csv\"\npredictors = [\"gap\"]\noutcomes = [\"task_c\"]\n",
    );
    let o = run(&cfg, &["regress"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/regression.json")).unwrap()).unwrap();
    let fit = &fits[0]["fit"];
    assert_eq!(fit["n"], 10);
    let slope = fit["slope"].as_f64().unwrap();
    // numpy.polyfit(x, y, 1)
    assert!((slope - 2.9440993788819863).abs() < 1e-10, "{slope}");

    let cfg = write_config(
        dir.path(),
        "fe.toml",
        "output = \"out\"\n[regress]\ntable = \"table.csv\"\npredictors = [\"gap\"]\noutcomes = [\"task_c\"]\nfixed_effects = { task_c = \"corpus\" }\n",
    );
    let o = run(&cfg, &["regress"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/regression.json")).unwrap()).unwrap();
    let fit = &fits[0]["fit"];
    // numpy.linalg.lstsq with group dummies
    assert!((fit["slope"].as_f64().unwrap() - 3.0493614083534686).abs() < 1e-10);
    assert!((fit["t"].as_f64().unwrap() - 62.07800225924074).abs() < 1e-8);
    assert_eq!(fit["df"], 6);
    let csv = fs::read_to_string(dir.path().join("out/regression.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("task_c,gap,corpus,10,"));
}

#[test]
fn exit_codes_and_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[training]\nlearning_rate = 1.0\n");
    let o = run(&bad, &["train"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(stderr(&o).trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "config");

    let invalid = write_config(dir.path(), "invalid.toml", "[training]\nsplit = [0.5, 0.5, 0.5]\n");
    assert_eq!(run(&invalid, &["train"]).status.code(), Some(2));

    // curation needs resource paths
    let empty = write_config(dir.path(), "empty.toml", "");
    assert_eq!(run(&empty, &["curate"]).status.code(), Some(2));

    let out = dir.path().join("dry");
    let missing = write_config(
        dir.path(),
        "missing.toml",
        &format!("output = {}\n[resources]\nembeddings = \"nope.txt\"\nwordnet = \"nope\"\n", toml_str(&out)),
    );
    let o = run(&missing, &["train", "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_str(stderr(&o).trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["kind"], "io");

    let w = synthetic_world(dir.path(), 8);
    let ok = write_config(
        dir.path(),
        "ok.toml",
        &format!("output = {}\n{}", toml_str(&out), resources_section(&w)),
    );
    let o = run(&ok, &["curate", "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("dry run: curate"));
    assert!(!out.exists());
}

#[test]
fn curate_then_annotate_with_unreachable_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let w = synthetic_world(dir.path(), 16);
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!(
            "output = {}\n{}[curation]\ndegree_cap = 8\n{}[annotation]\nurl = \"http://127.0.0.1:9/v1\"\nmax_retries = 0\ntimeout_secs = 1.0\n",
            toml_str(&out),
            resources_section(&w),
            small_quotas(20)
        ),
    );
    let o = run(&cfg, &["curate", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("curation_report.json")).unwrap()).unwrap();
    assert!(report["final_count"].as_u64().unwrap() > 50);

    let o = run(&cfg, &["annotate", "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("cached"));

    let o = run(&cfg, &["annotate"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let err: Value = serde_json::from_str(stderr(&o).trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["kind"], "annotation");
}
