//! HTTP backend speaking a small JSON protocol.
//!
//! Request: `POST {endpoint}` with `{"prompt": "...", "target_tokens": ["Yes", "No"]}`.
//! Response: either `{"logits": [yes, no]}` or `{"probability": p}`.

use std::thread;
use std::time::Duration;

use log::warn;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{BackendError, BackendOutput, ScoreRequest, ScorerBackend};

/// Environment variable consulted for the endpoint when none is configured.
pub const ENDPOINT_ENV: &str = "LONGFACT_ENDPOINT";
/// Environment variable holding an `Name: value` auth header.
pub const AUTH_ENV: &str = "LONGFACT_AUTH_HEADER";

pub const TARGET_TOKENS: [&str; 2] = ["Yes", "No"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Header forwarded verbatim, e.g. `("Authorization", "Bearer ...")`.
    pub auth_header: Option<(String, String)>,
    pub timeout_ms: u64,
    /// Retries after the first attempt.
    pub retries: u32,
    /// Delay before the first retry; doubles on every further retry.
    pub backoff_ms: u64,
    pub max_premise_tokens: Option<usize>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            auth_header: None,
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 200,
            max_premise_tokens: None,
        }
    }
}

/// Parses `"Name: value"` into a header pair.
pub fn parse_header(raw: &str) -> Option<(String, String)> {
    let (name, value) = raw.split_once(':')?;
    let name = name.trim();
    (!name.is_empty()).then(|| (name.to_string(), value.trim().to_string()))
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    target_tokens: [&'a str; 2],
}

#[derive(Deserialize)]
struct WireResponse {
    logits: Option<[f64; 2]>,
    probability: Option<f64>,
}

pub struct RemoteBackend {
    config: RemoteConfig,
    client: Client,
    name: String,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        if config.endpoint.is_empty() {
            return Err(BackendError::Config("remote backend needs an endpoint".into()));
        }
        let client = Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        let name = format!("remote:{}", config.endpoint);
        Ok(Self { config, client, name })
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    fn attempt(&self, prompt: &str) -> Result<BackendOutput, Attempt> {
        let mut req = self.client.post(&self.config.endpoint).json(&WireRequest {
            prompt,
            target_tokens: TARGET_TOKENS,
        });
        if let Some((name, value)) = &self.config.auth_header {
            req = req.header(name.as_str(), value.as_str());
        }
        let resp = req.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(format!("HTTP {status}: {body}")));
        }
        let body: WireResponse = resp
            .json()
            .map_err(|e| Attempt::Fatal(format!("bad response body: {e}")))?;
        match (body.logits, body.probability) {
            (Some([yes, no]), _) => Ok(BackendOutput::Logits { yes, no }),
            (None, Some(p)) => Ok(BackendOutput::Probability(p)),
            (None, None) => Err(Attempt::Fatal(
                "response has neither \"logits\" nor \"probability\"".into(),
            )),
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl ScorerBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn max_premise_tokens(&self) -> Option<usize> {
        self.config.max_premise_tokens
    }

    fn evaluate(&self, request: &ScoreRequest<'_>) -> Result<BackendOutput, BackendError> {
        let attempts = self.config.retries + 1;
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        for attempt in 1..=attempts {
            match self.attempt(request.prompt) {
                Ok(out) => return Ok(out),
                Err(Attempt::Fatal(message)) => {
                    return Err(BackendError::Protocol {
                        endpoint: self.config.endpoint.clone(),
                        message,
                    })
                }
                Err(Attempt::Retry(message)) if attempt == attempts => {
                    return Err(BackendError::Transport {
                        endpoint: self.config.endpoint.clone(),
                        attempts,
                        message,
                    })
                }
                Err(Attempt::Retry(message)) => {
                    warn!(
                        "{}: attempt {attempt}/{attempts} failed ({message}); retrying in {delay:?}",
                        self.config.endpoint
                    );
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }
}
