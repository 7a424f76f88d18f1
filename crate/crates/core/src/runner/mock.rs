//! Stand-in model servers for running evaluations without a real model.
//!
//! - oracle: looks the request up in an [`AnswerKey`] built from the
//!   benchmark's ground truth,
//! - constant: always returns the same text,
//! - gibberish: returns text that never parses.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::client::{PredictError, Predictor};

#[derive(Debug, Error)]
pub enum MockError {
    #[error("answer key conflict for {key}: {existing:?} vs {new:?}")]
    Conflict {
        key: String,
        existing: String,
        new: String,
    },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("cannot start mock server: {0}")]
    Bind(String),
}

/// Maps `(image bytes, prompt)` to the answer the oracle should give.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnswerKey {
    answers: BTreeMap<String, String>,
}

impl AnswerKey {
    pub fn key(image_png: &[u8], prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update((image_png.len() as u64).to_le_bytes());
        h.update(image_png);
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    /// Adds an answer. Re-adding the same answer is a no-op; a different
    /// answer for the same request is an error.
    pub fn insert(
        &mut self,
        image_png: &[u8],
        prompt: &str,
        answer: impl Into<String>,
    ) -> Result<(), MockError> {
        let key = Self::key(image_png, prompt);
        let answer = answer.into();
        match self.answers.get(&key) {
            Some(existing) if *existing != answer => Err(MockError::Conflict {
                key,
                existing: existing.clone(),
                new: answer,
            }),
            Some(_) => Ok(()),
            None => {
                self.answers.insert(key, answer);
                Ok(())
            }
        }
    }

    pub fn merge(&mut self, other: AnswerKey) -> Result<(), MockError> {
        for (key, answer) in other.answers {
            match self.answers.get(&key) {
                Some(existing) if *existing != answer => {
                    return Err(MockError::Conflict {
                        key,
                        existing: existing.clone(),
                        new: answer,
                    })
                }
                _ => {
                    self.answers.insert(key, answer);
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, image_png: &[u8], prompt: &str) -> Option<&str> {
        self.answers
            .get(&Self::key(image_png, prompt))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<(), MockError> {
        let mut text = serde_json::to_string_pretty(self).expect("answer key serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| MockError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, MockError> {
        let err = |message: String| MockError::File {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockBehavior {
    Oracle(AnswerKey),
    Constant(String),
    Gibberish,
    /// Fixed status and body, for exercising client error paths.
    Raw(u16, String),
}

const GIBBERISH_WORDS: [&str; 8] = [
    "purple",
    "lantern",
    "quietly",
    "seventeen",
    "otter",
    "misty",
    "banjo",
    "orbit",
];

impl MockBehavior {
    /// Status code and response body for one request.
    pub fn respond(&self, image_png: &[u8], prompt: &str) -> (u16, String) {
        let text = |t: &str| (200, serde_json::json!({ "text": t }).to_string());
        match self {
            MockBehavior::Oracle(key) => match key.get(image_png, prompt) {
                Some(answer) => text(answer),
                None => (
                    404,
                    serde_json::json!({"error": "no answer for this request"}).to_string(),
                ),
            },
            MockBehavior::Constant(t) => text(t),
            MockBehavior::Gibberish => {
                let digest = Sha256::digest(prompt.as_bytes());
                let words: Vec<&str> = digest[..6]
                    .iter()
                    .map(|b| GIBBERISH_WORDS[(*b % 8) as usize])
                    .collect();
                text(&words.join(" "))
            }
            MockBehavior::Raw(status, body) => (*status, body.clone()),
        }
    }
}

/// In-process predictor with the same behavior as [`MockServer`].
pub struct MockPredictor(pub MockBehavior);

impl Predictor for MockPredictor {
    fn predict(&self, image_png: &[u8], prompt: &str) -> Result<String, PredictError> {
        let (status, body) = self.0.respond(image_png, prompt);
        if status != 200 {
            return Err(PredictError::Status {
                request_id: "in-process".into(),
                status,
                body,
            });
        }
        let v: serde_json::Value = serde_json::from_str(&body).expect("mock body is JSON");
        Ok(v["text"].as_str().unwrap_or_default().to_string())
    }
}

#[derive(Deserialize)]
struct WireRequest {
    image: String,
    prompt: String,
}

/// A mock model server on a local port, stopped when dropped.
pub struct MockServer {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    served: Arc<AtomicUsize>,
    workers: Vec<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `127.0.0.1` on a free port.
    pub fn start(behavior: MockBehavior, workers: usize) -> Result<Self, MockError> {
        Self::bind("127.0.0.1:0", behavior, workers)
    }

    pub fn bind(addr: &str, behavior: MockBehavior, workers: usize) -> Result<Self, MockError> {
        let server =
            Arc::new(tiny_http::Server::http(addr).map_err(|e| MockError::Bind(e.to_string()))?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| MockError::Bind("not an IP listener".into()))?;
        let behavior = Arc::new(behavior);
        let stop = Arc::new(AtomicBool::new(false));
        let served = Arc::new(AtomicUsize::new(0));
        let workers = (0..workers.max(1))
            .map(|_| {
                let (server, behavior, stop, served) = (
                    server.clone(),
                    behavior.clone(),
                    stop.clone(),
                    served.clone(),
                );
                thread::spawn(move || {
                    while !stop.load(Ordering::Relaxed) {
                        match server.recv_timeout(Duration::from_millis(50)) {
                            Ok(Some(req)) => {
                                handle(req, &behavior);
                                served.fetch_add(1, Ordering::Relaxed);
                            }
                            Ok(None) => {}
                            Err(_) => break,
                        }
                    }
                })
            })
            .collect();
        Ok(Self {
            addr,
            stop,
            served,
            workers,
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests_served(&self) -> usize {
        self.served.load(Ordering::Relaxed)
    }

    /// Blocks until the process is killed.
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn handle(mut req: tiny_http::Request, behavior: &MockBehavior) {
    let json_header =
        tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    let reply = |req: tiny_http::Request, status: u16, body: String| {
        let resp = tiny_http::Response::from_string(body)
            .with_status_code(status)
            .with_header(json_header.clone());
        let _ = req.respond(resp);
    };
    if req.method() != &tiny_http::Method::Post || req.url() != "/predict" {
        reply(
            req,
            404,
            r#"{"error":"only POST /predict is served"}"#.into(),
        );
        return;
    }
    let mut body = String::new();
    if req.as_reader().read_to_string(&mut body).is_err() {
        reply(req, 400, r#"{"error":"unreadable body"}"#.into());
        return;
    }
    let parsed = serde_json::from_str::<WireRequest>(&body)
        .ok()
        .and_then(|w| {
            base64::engine::general_purpose::STANDARD
                .decode(w.image)
                .ok()
                .map(|img| (img, w.prompt))
        });
    match parsed {
        Some((image, prompt)) => {
            let (status, body) = behavior.respond(&image, &prompt);
            reply(req, status, body);
        }
        None => reply(req, 400, r#"{"error":"expected {image, prompt}"}"#.into()),
    }
}
