//! Minimal HTTP server that replays recorded backend responses.
//!
//! Each recording maps an exact prompt to a status and JSON body. A recording
//! with `fail_first = n` answers 503 to its first `n` requests. Prompts with
//! no recording get 404.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::Value;

#[derive(Clone)]
pub struct Recording {
    pub premise: String,
    pub hypothesis: String,
    pub prompt: String,
    pub status: u16,
    pub body: Value,
    pub fail_first: usize,
}

pub fn load_recordings(path: &Path) -> Vec<Recording> {
    let raw: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    raw.into_iter()
        .map(|r| Recording {
            premise: r["premise"].as_str().unwrap().to_owned(),
            hypothesis: r["hypothesis"].as_str().unwrap().to_owned(),
            prompt: r["prompt"].as_str().unwrap().to_owned(),
            status: r["status"].as_u64().unwrap() as u16,
            body: r["body"].clone(),
            fail_first: r["fail_first"].as_u64().unwrap() as usize,
        })
        .collect()
}

pub struct FixtureServer {
    pub url: String,
    hits: Arc<Mutex<HashMap<String, usize>>>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
}

impl FixtureServer {
    pub fn start(recordings: Vec<Recording>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/score", listener.local_addr().unwrap());
        let table: Arc<HashMap<String, Recording>> =
            Arc::new(recordings.into_iter().map(|r| (r.prompt.clone(), r)).collect());
        let hits = Arc::new(Mutex::new(HashMap::new()));
        let auth = Arc::new(Mutex::new(Vec::new()));
        let (h, a) = (hits.clone(), auth.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (table, h, a) = (table.clone(), h.clone(), a.clone());
                thread::spawn(move || serve(stream, &table, &h, &a));
            }
        });
        Self { url, hits, auth }
    }

    /// Requests received for `prompt`, including failed ones.
    pub fn hits(&self, prompt: &str) -> usize {
        self.hits.lock().unwrap().get(prompt).copied().unwrap_or(0)
    }

    pub fn auth_headers(&self) -> Vec<Option<String>> {
        self.auth.lock().unwrap().clone()
    }
}

fn serve(
    stream: TcpStream,
    table: &HashMap<String, Recording>,
    hits: &Mutex<HashMap<String, usize>>,
    auth: &Mutex<Vec<Option<String>>>,
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut content_length = 0;
    let mut authorization = None;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((name, value)) = l.split_once(':') {
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap(),
                "authorization" => authorization = Some(value.trim().to_owned()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body).unwrap();
    auth.lock().unwrap().push(authorization);
    let request: Value = serde_json::from_slice(&body).unwrap();
    let prompt = request["prompt"].as_str().unwrap_or_default().to_owned();
    assert_eq!(request["target_tokens"], serde_json::json!(["Yes", "No"]));
    let seen = {
        let mut h = hits.lock().unwrap();
        let n = h.entry(prompt.clone()).or_insert(0);
        *n += 1;
        *n
    };
    let (status, payload) = match table.get(&prompt) {
        Some(r) if seen <= r.fail_first => (503, r#"{"error":"transient"}"#.to_owned()),
        Some(r) => (r.status, r.body.to_string()),
        None => (404, r#"{"error":"no recording"}"#.to_owned()),
    };
    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 {status} Fixture\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = out.flush();
}
