//! A scripted stand-in for a chat-completions endpoint, for tests.
//!
//! Each request is answered by a user-supplied function of the pair's words
//! and the number of earlier requests for that pair.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

#[derive(Debug, Clone)]
pub enum MockReply {
    /// 200 with this assistant message.
    Text(String),
    /// Bare status code with an empty JSON body.
    Status(u16),
    /// Holds the connection open without answering.
    Stall(Duration),
    /// 200 whose body is not JSON.
    Garbled,
}

type Script = dyn Fn(&str, &str, usize) -> MockReply + Send + Sync;

pub struct MockServer {
    url: String,
    calls: Arc<Mutex<BTreeMap<(String, String), usize>>>,
    total: Arc<AtomicUsize>,
    shutdown: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
    handle: Option<JoinHandle<()>>,
}

/// Deterministic scores for a pair, on the two-decimal grid.
pub fn scores_for(w1: &str, w2: &str) -> (f64, f64) {
    let h = crc32fast::hash(format!("{w1}|{w2}").as_bytes());
    ((h % 101) as f64 / 100.0, ((h / 101) % 101) as f64 / 100.0)
}

/// Well-formed answer text carrying [`scores_for`].
pub fn reply_text(w1: &str, w2: &str) -> String {
    let (s, r) = scores_for(w1, w2);
    format!("SIM: {s:.2}\nREL: {r:.2}\nREASON: {w1} and {w2} scored by the mock.")
}

fn quoted_after<'a>(text: &'a str, label: &str) -> Option<&'a str> {
    let rest = &text[text.find(label)? + label.len()..];
    let rest = rest.strip_prefix('"')?;
    Some(&rest[..rest.find('"')?])
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) -> io::Result<()> {
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

fn handle(mut stream: TcpStream, script: &Script, calls: &Mutex<BTreeMap<(String, String), usize>>, total: &AtomicUsize) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let prompt = request
        .pointer("/messages/1/content")
        .and_then(|v| v.as_str())
        .unwrap_or_default();
    let w1 = quoted_after(prompt, "WORD1: ").unwrap_or_default().to_string();
    let w2 = quoted_after(prompt, "WORD2: ").unwrap_or_default().to_string();
    let attempt = {
        let mut c = calls.lock().unwrap();
        let n = c.entry((w1.clone(), w2.clone())).or_insert(0);
        *n += 1;
        *n - 1
    };
    total.fetch_add(1, Ordering::SeqCst);
    match script(&w1, &w2, attempt) {
        MockReply::Text(t) => {
            let body = serde_json::json!({
                "id": "mock",
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": t}, "finish_reason": "stop"}],
            });
            respond(&mut stream, 200, &body.to_string())
        }
        MockReply::Status(code) => respond(&mut stream, code, "{}"),
        MockReply::Stall(d) => {
            std::thread::sleep(d);
            Ok(())
        }
        MockReply::Garbled => respond(&mut stream, 200, "<html>upstream hiccup</html>"),
    }
}

impl MockServer {
    pub fn start<F>(script: F) -> io::Result<Self>
    where
        F: Fn(&str, &str, usize) -> MockReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let calls = Arc::new(Mutex::new(BTreeMap::new()));
        let total = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let script: Arc<Script> = Arc::new(script);
        let handle = {
            let (calls, total, shutdown) = (calls.clone(), total.clone(), shutdown.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (script, calls, total) = (script.clone(), calls.clone(), total.clone());
                    std::thread::spawn(move || {
                        let _ = handle(stream, &*script, &calls, &total);
                    });
                }
            })
        };
        Ok(Self {
            url: format!("http://{addr}/v1"),
            calls,
            total,
            shutdown,
            addr,
            handle: Some(handle),
        })
    }

    /// Base URL to put in an endpoint configuration.
    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn calls(&self, w1: &str, w2: &str) -> usize {
        self.calls
            .lock()
            .unwrap()
            .get(&(w1.to_string(), w2.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.total.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
