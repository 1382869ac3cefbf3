use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{parse_response, system_message, PromptTemplate};
use crate::error::{Error, Result};
use crate::pairs::{CandidatePair, ScoredPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{url}/chat/completions`.
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub concurrency: usize,
    /// Extra attempts per pair after the first.
    pub max_retries: usize,
    pub timeout_secs: f64,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: "https://api.deepseek.com/v1".into(),
            model: "deepseek-chat".into(),
            temperature: 0.3,
            concurrency: 8,
            max_retries: 5,
            timeout_secs: 60.0,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            api_key_env: "SIMREL_API_KEY".into(),
            api_key: None,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("annotation config: {m}")));
        if !(self.url.starts_with("http://") || self.url.starts_with("https://")) {
            return bad("url must start with http:// or https://");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if self.concurrency == 0 || self.concurrency > 256 {
            return bad("concurrency must lie in [1, 256]");
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        Ok(())
    }

    /// Fills `api_key` from the configured environment variable.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
        }
        self
    }

    fn backoff(&self, attempt: usize) -> Duration {
        let ms = self
            .backoff_base_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.backoff_max_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub pairs: usize,
    pub cache_hits: usize,
    pub misses: usize,
    pub requests: usize,
    pub retries: usize,
    pub parse_failures: usize,
    pub rate_limited: usize,
    pub timeouts: usize,
    pub server_errors: usize,
    pub transport_errors: usize,
    pub completed: usize,
    pub quarantined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantined {
    pub w1: String,
    pub w2: String,
    pub source: String,
    pub error: String,
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct AnnotationOutcome {
    /// One record per distinct input pair that has a score, in input order.
    pub scored: Vec<ScoredPair>,
    pub quarantined: Vec<Quarantined>,
    pub stats: AnnotationStats,
}

/// Sidecar file for pairs that exhausted their retries.
pub fn quarantine_path(cache: &Path) -> PathBuf {
    let mut name = cache.file_name().unwrap_or_default().to_os_string();
    name.push(".quarantine");
    cache.with_file_name(name)
}

/// Reads a cache file; a missing file is an empty cache. Unreadable lines
/// (such as a record cut short by a crash) are skipped with a warning.
pub fn load_cache(path: &Path) -> Result<BTreeMap<(String, String), ScoredPair>> {
    let mut out = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(path, e)),
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ScoredPair>(&line) {
            Ok(p) if p.validate().is_ok() => {
                let key = crate::pairs::canonical(&p.w1, &p.w2);
                out.entry(key).or_insert(p);
            }
            _ => log::warn!("{}:{}: skipping unreadable cache record", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Opens `path` for appending, first terminating a trailing partial line.
fn open_append(path: &Path) -> Result<File> {
    let mut f = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let len = f.metadata().map_err(|e| Error::io(path, e))?.len();
    if len > 0 {
        let mut last = [0u8; 1];
        f.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(path, e))?;
        f.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
        if last[0] != b'\n' {
            f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(f)
}

enum Attempt {
    Text(String),
    RateLimited(Option<Duration>),
    Timeout,
    Server(u16),
    Transport(String),
    /// Not worth retrying (bad credentials, bad request).
    Fatal(String),
}

fn call(agent: &ureq::Agent, cfg: &EndpointConfig, url: &str, prompt: &str) -> Attempt {
    let body = json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "n": 1,
        "messages": [
            {"role": "system", "content": system_message()},
            {"role": "user", "content": prompt},
        ],
    });
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(key) = &cfg.api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = match req.send_json(&body) {
        Ok(r) => r,
        Err(ureq::Error::Timeout(_)) => return Attempt::Timeout,
        Err(e) => return Attempt::Transport(e.to_string()),
    };
    let status = resp.status().as_u16();
    if status == 429 {
        let wait = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64);
        return Attempt::RateLimited(wait);
    }
    if status >= 500 || status == 408 {
        return Attempt::Server(status);
    }
    if status >= 400 {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        return Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()));
    }
    let value: serde_json::Value = match resp.body_mut().read_json() {
        Ok(v) => v,
        Err(ureq::Error::Timeout(_)) => return Attempt::Timeout,
        // a garbled body is treated like an unparseable answer
        Err(e) => return Attempt::Text(format!("<unreadable body: {e}>")),
    };
    match value.pointer("/choices/0/message/content").and_then(|c| c.as_str()) {
        Some(text) => Attempt::Text(text.to_string()),
        None => Attempt::Text(String::new()),
    }
}

enum PairResult {
    Done(ScoredPair, AnnotationStats),
    Quarantined(Quarantined, AnnotationStats),
    Abort(String, AnnotationStats),
}

fn annotate_one(agent: &ureq::Agent, cfg: &EndpointConfig, url: &str, tpl: &PromptTemplate, pair: &CandidatePair) -> PairResult {
    let prompt = tpl.render(&pair.w1, &pair.w2);
    let mut st = AnnotationStats::default();
    let mut last_error = String::new();
    let mut transport_only = true;
    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            st.retries += 1;
        }
        st.requests += 1;
        let wait = match call(agent, cfg, url, &prompt) {
            Attempt::Text(text) => match parse_response(&text) {
                Ok(s) => {
                    let scored = ScoredPair {
                        w1: pair.w1.clone(),
                        w2: pair.w2.clone(),
                        sim: s.sim,
                        rel: s.rel,
                        source: pair.source.to_string(),
                        reason: s.reason,
                        annotator: cfg.model.clone(),
                    };
                    return PairResult::Done(scored, st);
                }
                Err(e) => {
                    st.parse_failures += 1;
                    transport_only = false;
                    last_error = format!("unparseable response: {e}");
                    Duration::ZERO
                }
            },
            Attempt::RateLimited(after) => {
                st.rate_limited += 1;
                transport_only = false;
                last_error = "rate limited (HTTP 429)".into();
                after.unwrap_or_else(|| cfg.backoff(attempt)).min(Duration::from_millis(cfg.backoff_max_ms))
            }
            Attempt::Timeout => {
                st.timeouts += 1;
                transport_only = false;
                last_error = "request timed out".into();
                cfg.backoff(attempt)
            }
            Attempt::Server(code) => {
                st.server_errors += 1;
                transport_only = false;
                last_error = format!("server error (HTTP {code})");
                cfg.backoff(attempt)
            }
            Attempt::Transport(e) => {
                st.transport_errors += 1;
                last_error = format!("transport error: {e}");
                cfg.backoff(attempt)
            }
            Attempt::Fatal(e) => return PairResult::Abort(e, st),
        };
        if attempt < cfg.max_retries && !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
    if transport_only {
        return PairResult::Abort(format!("endpoint unreachable: {last_error}"), st);
    }
    st.quarantined += 1;
    PairResult::Quarantined(
        Quarantined {
            w1: pair.w1.clone(),
            w2: pair.w2.clone(),
            source: pair.source.to_string(),
            error: last_error,
            attempts: cfg.max_retries + 1,
        },
        st,
    )
}

fn add(total: &mut AnnotationStats, s: &AnnotationStats) {
    total.requests += s.requests;
    total.retries += s.retries;
    total.parse_failures += s.parse_failures;
    total.rate_limited += s.rate_limited;
    total.timeouts += s.timeouts;
    total.server_errors += s.server_errors;
    total.transport_errors += s.transport_errors;
    total.quarantined += s.quarantined;
}

/// Annotates every pair not already in the cache at `cache`, appending each
/// result to the cache as soon as it arrives. Pairs that keep failing are
/// written to [`quarantine_path`] and left out of the result. If the
/// endpoint cannot be reached at all, or rejects the request outright, the
/// run stops with an error; everything completed so far stays cached.
pub fn annotate_batch(
    pairs: &[CandidatePair],
    cfg: &EndpointConfig,
    template: &PromptTemplate,
    cache: &Path,
) -> Result<AnnotationOutcome> {
    cfg.validate()?;
    let mut cached = load_cache(cache)?;
    let mut stats = AnnotationStats::default();
    let mut order = Vec::new();
    let mut todo = VecDeque::new();
    let mut queued = std::collections::BTreeSet::new();
    for p in pairs {
        let key = (p.w1.clone(), p.w2.clone());
        if !queued.insert(key.clone()) {
            continue;
        }
        order.push(key.clone());
        if cached.contains_key(&key) {
            stats.cache_hits += 1;
        } else {
            stats.misses += 1;
            todo.push_back(p.clone());
        }
    }
    stats.pairs = order.len();
    let mut quarantined = Vec::new();
    let mut abort: Option<String> = None;

    if !todo.is_empty() {
        let mut sink = open_append(cache)?;
        let qpath = quarantine_path(cache);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/chat/completions", cfg.url.trim_end_matches('/'));
        let queue = Mutex::new(todo);
        let stop = AtomicBool::new(false);
        let (tx, rx) = mpsc::channel::<PairResult>();
        std::thread::scope(|s| -> Result<()> {
            for _ in 0..cfg.concurrency {
                let tx = tx.clone();
                let (queue, stop, agent, url) = (&queue, &stop, &agent, &url);
                s.spawn(move || loop {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Some(pair) = queue.lock().expect("queue poisoned").pop_front() else {
                        break;
                    };
                    let r = annotate_one(agent, cfg, url, template, &pair);
                    if matches!(r, PairResult::Abort(..)) {
                        stop.store(true, Ordering::SeqCst);
                    }
                    if tx.send(r).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            // single writer: results are persisted in arrival order
            for r in rx {
                match r {
                    PairResult::Done(p, st) => {
                        add(&mut stats, &st);
                        let mut line = serde_json::to_string(&p)?;
                        line.push('\n');
                        sink.write_all(line.as_bytes())
                            .and_then(|_| sink.flush())
                            .map_err(|e| Error::io(cache, e))?;
                        stats.completed += 1;
                        cached.insert((p.w1.clone(), p.w2.clone()), p);
                    }
                    PairResult::Quarantined(q, st) => {
                        add(&mut stats, &st);
                        let mut qf = open_append(&qpath)?;
                        let mut line = serde_json::to_string(&q)?;
                        line.push('\n');
                        qf.write_all(line.as_bytes()).map_err(|e| Error::io(&qpath, e))?;
                        log::warn!("quarantined ({}, {}): {}", q.w1, q.w2, q.error);
                        quarantined.push(q);
                    }
                    PairResult::Abort(msg, st) => {
                        add(&mut stats, &st);
                        abort.get_or_insert(msg);
                    }
                }
            }
            Ok(())
        })?;
    }
    if let Some(msg) = abort {
        return Err(Error::Annotation(format!(
            "{msg} ({} of {} pending pairs completed and cached)",
            stats.completed, stats.misses
        )));
    }
    let scored = order.iter().filter_map(|k| cached.get(k).cloned()).collect();
    Ok(AnnotationOutcome {
        scored,
        quarantined,
        stats,
    })
}
