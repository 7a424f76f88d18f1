//! Model server client.
//!
//! Wire format: `POST {base}/predict` with `{"image": <base64 PNG>, "prompt": ...}`,
//! answered by `{"text": ...}`; failures are non-2xx with `{"error": ...}`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_MAX_RETRIES: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("request {request_id} timed out")]
    Timeout { request_id: String },
    #[error("request {request_id}: server answered {status}: {body}")]
    Status {
        request_id: String,
        status: u16,
        body: String,
    },
    #[error("request {request_id}: malformed response: {message}")]
    Malformed { request_id: String, message: String },
    #[error("request {request_id}: connection failed: {message}")]
    Connection { request_id: String, message: String },
    #[error("invalid endpoint: {0}")]
    Config(String),
}

impl PredictError {
    /// Short tag used in prediction files.
    pub fn kind(&self) -> &'static str {
        match self {
            PredictError::Timeout { .. } => "timeout",
            PredictError::Status { .. } => "status",
            PredictError::Malformed { .. } => "malformed",
            PredictError::Connection { .. } => "connection",
            PredictError::Config(_) => "config",
        }
    }

    fn is_retryable(&self) -> bool {
        match self {
            PredictError::Timeout { .. } | PredictError::Connection { .. } => true,
            PredictError::Status { status, .. } => *status >= 500 || *status == 429,
            PredictError::Malformed { .. } | PredictError::Config(_) => false,
        }
    }
}

/// Anything that turns a screenshot and a prompt into model text.
pub trait Predictor: Sync {
    fn predict(&self, image_png: &[u8], prompt: &str) -> Result<String, PredictError>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, image_png: &[u8], prompt: &str) -> Result<String, PredictError> {
        (**self).predict(image_png, prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub auth_token: Option<String>,
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
            auth_token: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    fn predict_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.starts_with("http://") || base.starts_with("https://") {
            format!("{base}/predict")
        } else {
            format!("http://{base}/predict")
        }
    }
}

#[derive(Serialize)]
struct PredictRequest<'a> {
    image: String,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct PredictResponse {
    text: String,
}

/// HTTP client for a [`ModelEndpoint`], retrying transient failures with
/// exponential backoff.
pub struct HttpPredictor {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
    counter: AtomicU64,
    backoff: Duration,
}

impl HttpPredictor {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self, PredictError> {
        if endpoint.timeout.is_zero() {
            return Err(PredictError::Config("timeout must be positive".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            endpoint,
            agent,
            counter: AtomicU64::new(0),
            backoff: BACKOFF_BASE,
        })
    }

    /// Overrides the first retry delay (doubled on each further attempt).
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn attempt(&self, body: &PredictRequest<'_>, request_id: &str) -> Result<String, PredictError> {
        let mut req = self
            .agent
            .post(self.endpoint.predict_url())
            .header("X-Request-Id", request_id);
        if let Some(tok) = &self.endpoint.auth_token {
            req = req.header("Authorization", format!("Bearer {tok}"));
        }
        let rid = || request_id.to_string();
        let mut resp = req.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => PredictError::Timeout { request_id: rid() },
            other => PredictError::Connection {
                request_id: rid(),
                message: other.to_string(),
            },
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => PredictError::Timeout { request_id: rid() },
            other => PredictError::Malformed {
                request_id: rid(),
                message: other.to_string(),
            },
        })?;
        if !(200..300).contains(&status) {
            return Err(PredictError::Status {
                request_id: rid(),
                status,
                body: text,
            });
        }
        serde_json::from_str::<PredictResponse>(&text)
            .map(|r| r.text)
            .map_err(|e| PredictError::Malformed {
                request_id: rid(),
                message: e.to_string(),
            })
    }
}

impl Predictor for HttpPredictor {
    fn predict(&self, image_png: &[u8], prompt: &str) -> Result<String, PredictError> {
        let body = PredictRequest {
            image: base64::engine::general_purpose::STANDARD.encode(image_png),
            prompt,
        };
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            let request_id = format!("ggb-{n:08x}-{attempt}");
            match self.attempt(&body, &request_id) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempt < self.endpoint.max_retries => {
                    log::warn!("{e}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => {
                    log::error!("{e}");
                    return Err(e);
                }
            }
        }
    }
}
