use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use simrel::annotate::{annotate_batch, load_cache, parse_response, quarantine_path, EndpointConfig, PromptTemplate};
use simrel::mock_endpoint::{reply_text, scores_for, MockReply, MockServer};
use simrel::pairs::{CandidatePair, ScoredPair, Source};
use simrel::Error;

#[derive(Deserialize)]
struct Variant {
    text: String,
    sim: Option<f64>,
    rel: Option<f64>,
    #[serde(default)]
    fail: bool,
}

#[test]
fn response_variants_parse_as_labeled() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/llm_responses.jsonl");
    let variants: Vec<Variant> = simrel::jsonl::read(&path).unwrap();
    assert!(variants.len() >= 20);
    for v in variants {
        match parse_response(&v.text) {
            Ok(p) => {
                assert!(!v.fail, "{:?} should fail, got {p:?}", v.text);
                assert_eq!((Some(p.sim), Some(p.rel)), (v.sim, v.rel), "{:?}", v.text);
            }
            Err(e) => assert!(v.fail, "{:?} failed: {e}", v.text),
        }
    }
}

fn pairs(n: usize) -> Vec<CandidatePair> {
    (0..n)
        .map(|i| CandidatePair::new(&format!("alpha{}", letters(i)), &format!("beta{}", letters(i)), Source::NegFar).unwrap())
        .collect()
}

fn letters(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.insert(0, (b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            return s;
        }
    }
}

fn endpoint(server: &MockServer) -> EndpointConfig {
    EndpointConfig {
        url: server.url().to_string(),
        model: "mock-model".into(),
        concurrency: 4,
        max_retries: 3,
        timeout_secs: 1.0,
        backoff_base_ms: 5,
        backoff_max_ms: 20,
        ..Default::default()
    }
}

fn expected(p: &CandidatePair) -> (f64, f64) {
    let r = parse_response(&reply_text(&p.w1, &p.w2)).unwrap();
    (r.sim, r.rel)
}

#[test]
fn fixed_reply_matches_direct_parse() {
    let server = MockServer::start(|a, b, _| MockReply::Text(reply_text(a, b))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(12);
    let out = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(out.scored.len(), 12);
    for (p, s) in input.iter().zip(&out.scored) {
        assert_eq!((&s.w1, &s.w2), (&p.w1, &p.w2));
        assert_eq!((s.sim, s.rel), expected(p));
        assert_eq!((s.sim, s.rel), scores_for(&p.w1, &p.w2));
        assert_eq!(s.source, "neg-far");
        assert_eq!(s.annotator, "mock-model");
    }
    assert_eq!(out.stats.requests, 12);
    assert_eq!(out.stats.retries, 0);
    assert_eq!(load_cache(&cache).unwrap().len(), 12);
}

#[test]
fn complete_cache_makes_no_calls() {
    let server = MockServer::start(|a, b, _| MockReply::Text(reply_text(a, b))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(5);
    let first = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    let bytes = std::fs::read(&cache).unwrap();
    let calls = server.total_calls();
    let second = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(server.total_calls(), calls);
    assert_eq!(second.stats.cache_hits, 5);
    assert_eq!(second.stats.requests, 0);
    assert_eq!(second.scored, first.scored);
    assert_eq!(std::fs::read(&cache).unwrap(), bytes);
}

#[test]
fn two_failures_then_success_counts_two_retries() {
    let server = MockServer::start(|a, b, attempt| match attempt {
        0 => MockReply::Status(500),
        1 => MockReply::Text("I'd rather not.".into()),
        _ => MockReply::Text(reply_text(a, b)),
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(1);
    let out = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(out.scored.len(), 1);
    assert_eq!(out.stats.retries, 2);
    assert_eq!(out.stats.requests, 3);
    assert_eq!(out.stats.server_errors, 1);
    assert_eq!(out.stats.parse_failures, 1);
    assert_eq!(server.calls(&input[0].w1, &input[0].w2), 3);
}

#[test]
fn persistent_garbage_is_quarantined() {
    let server = MockServer::start(|a, b, _| {
        if a.ends_with('b') {
            MockReply::Text("SIM: ???".into())
        } else {
            MockReply::Text(reply_text(a, b))
        }
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(3);
    let out = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(out.scored.len(), 2);
    assert_eq!(out.quarantined.len(), 1);
    assert_eq!(out.quarantined[0].w1, "alphab");
    assert_eq!(out.quarantined[0].attempts, 4);
    assert_eq!(server.calls("alphab", "betab"), 4);
    let q = std::fs::read_to_string(quarantine_path(&cache)).unwrap();
    assert_eq!(q.lines().count(), 1);
    assert!(!load_cache(&cache).unwrap().contains_key(&("alphab".to_string(), "betab".to_string())));
}

#[test]
fn rate_limits_and_timeouts_are_retried() {
    let server = MockServer::start(|a, b, attempt| match (a.as_bytes()[a.len() - 1] % 3, attempt) {
        (0, 0) => MockReply::Status(429),
        (1, 0) => MockReply::Stall(Duration::from_millis(1500)),
        (2, 0) | (2, 1) => MockReply::Garbled,
        _ => MockReply::Text(reply_text(a, b)),
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(30);
    let out = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(out.scored.len(), 30);
    let mut expected_retries = 0;
    for p in &input {
        let calls = server.calls(&p.w1, &p.w2);
        expected_retries += calls - 1;
        let want = match p.w1.as_bytes()[p.w1.len() - 1] % 3 {
            0 | 1 => 2,
            _ => 3,
        };
        assert_eq!(calls, want, "{p:?}");
    }
    assert_eq!(out.stats.retries, expected_retries);
    assert!(out.stats.rate_limited > 0 && out.stats.timeouts > 0);
}

#[test]
fn unreachable_endpoint_aborts_and_keeps_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let done = ScoredPair {
        w1: "alphaa".into(),
        w2: "betaa".into(),
        sim: 0.5,
        rel: 0.25,
        source: "neg-far".into(),
        reason: None,
        annotator: "earlier".into(),
    };
    std::fs::write(&cache, serde_json::to_string(&done).unwrap() + "\n").unwrap();
    // bind then drop to obtain a port with nothing listening
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = EndpointConfig {
        url: format!("http://127.0.0.1:{port}/v1"),
        max_retries: 1,
        backoff_base_ms: 1,
        backoff_max_ms: 2,
        ..Default::default()
    };
    let err = annotate_batch(&pairs(3), &cfg, &PromptTemplate::default(), &cache).unwrap_err();
    assert!(matches!(err, Error::Annotation(ref m) if m.contains("unreachable")), "{err}");
    let kept = load_cache(&cache).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept.values().next().unwrap(), &done);
}

#[test]
fn truncated_cache_line_is_redone() {
    let server = MockServer::start(|a, b, _| MockReply::Text(reply_text(a, b))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let input = pairs(4);
    annotate_batch(&input[..2], &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    // simulate a crash halfway through writing a third record
    let mut text = std::fs::read_to_string(&cache).unwrap();
    text.push_str("{\"w1\":\"alphac\",\"w2\":\"be");
    std::fs::write(&cache, text).unwrap();
    let before = server.total_calls();
    let out = annotate_batch(&input, &endpoint(&server), &PromptTemplate::default(), &cache).unwrap();
    assert_eq!(out.stats.cache_hits, 2);
    assert_eq!(server.total_calls() - before, 2);
    assert_eq!(out.scored.len(), 4);
    assert_eq!(load_cache(&cache).unwrap().len(), 4);
}

#[test]
fn result_is_independent_of_concurrency() {
    let server = MockServer::start(|a, b, attempt| {
        if attempt == 0 && a.len() % 2 == 0 {
            MockReply::Status(503)
        } else {
            MockReply::Text(reply_text(a, b))
        }
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let input = pairs(40);
    let mut results = Vec::new();
    for (i, conc) in [1usize, 8].into_iter().enumerate() {
        let cfg = EndpointConfig {
            concurrency: conc,
            ..endpoint(&server)
        };
        let cache = dir.path().join(format!("c{i}.jsonl"));
        results.push(annotate_batch(&input, &cfg, &PromptTemplate::default(), &cache).unwrap().scored);
    }
    assert_eq!(results[0], results[1]);
}
