//! Blocking JSON client for the model service.
//!
//! Every call carries an `X-Request-Id` header. Transport failures, non-2xx
//! statuses and undecodable bodies are all retried with exponential backoff
//! until the retry budget is spent; the final error names the request id and
//! the number of attempts.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::Serialize;
use serde::de::DeserializeOwned;
use thiserror::Error;

pub const ENV_URL: &str = "CHARTSUM_BACKEND_URL";
pub const ENV_TIMEOUT_MS: &str = "CHARTSUM_BACKEND_TIMEOUT_MS";
pub const ENV_RETRIES: &str = "CHARTSUM_BACKEND_RETRIES";

pub const DEFAULT_URL: &str = "http://127.0.0.1:8000";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_RETRIES: u32 = 3;

const MAX_BACKOFF: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            base_url: DEFAULT_URL.to_string(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            retries: DEFAULT_RETRIES,
            backoff_ms: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureKind {
    Transport(String),
    Status { code: u16, body: String },
    Malformed(String),
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::Transport(m) => write!(f, "transport error: {m}"),
            FailureKind::Status { code, body } => write!(f, "HTTP {code}: {}", body.trim()),
            FailureKind::Malformed(m) => write!(f, "malformed response: {m}"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("request {request_id} to {endpoint} failed after {attempts} attempt(s): {kind}")]
pub struct ServiceError {
    pub request_id: String,
    pub endpoint: String,
    pub attempts: u32,
    pub kind: FailureKind,
}

pub struct ServiceClient {
    agent: ureq::Agent,
    config: ServiceConfig,
    next_id: AtomicU64,
}

impl ServiceClient {
    pub fn new(config: ServiceConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(config.timeout_ms)).build();
        ServiceClient { agent, config, next_id: AtomicU64::new(1) }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn request_id(&self) -> String {
        format!("chartsum-{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    pub fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ServiceError> {
        self.post_json_checked(path, body, |_: &T| Ok(()))
    }

    /// Like [`post_json`](Self::post_json), but a decoded body rejected by
    /// `check` counts as malformed and is retried.
    #[allow(clippy::result_large_err)]
    pub fn post_json_checked<B, T, C>(&self, path: &str, body: &B, check: C) -> Result<T, ServiceError>
    where
        B: Serialize,
        T: DeserializeOwned,
        C: Fn(&T) -> Result<(), String>,
    {
        let body = serde_json::to_value(body).expect("request bodies serialize");
        self.with_retries(path, check, |id| {
            self.agent.post(&self.url(path)).set("X-Request-Id", id).send_json(body.clone())
        })
    }

    #[allow(clippy::result_large_err)]
    pub fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ServiceError> {
        self.with_retries(path, |_: &T| Ok(()), |id| self.agent.get(&self.url(path)).set("X-Request-Id", id).call())
    }

    fn with_retries<T, C, F>(&self, path: &str, check: C, send: F) -> Result<T, ServiceError>
    where
        T: DeserializeOwned,
        C: Fn(&T) -> Result<(), String>,
        F: Fn(&str) -> Result<ureq::Response, ureq::Error>,
    {
        let request_id = self.request_id();
        let attempts = self.config.retries + 1;
        let mut last = None;
        for attempt in 1..=attempts {
            if attempt > 1 {
                let factor = 1u64 << (attempt - 2).min(16);
                let delay = Duration::from_millis(self.config.backoff_ms.saturating_mul(factor)).min(MAX_BACKOFF);
                thread::sleep(delay);
            }
            let kind = match send(&request_id) {
                Ok(resp) => match resp.into_string() {
                    Ok(text) => match serde_json::from_str::<T>(&text) {
                        Ok(v) => match check(&v) {
                            Ok(()) => return Ok(v),
                            Err(m) => FailureKind::Malformed(m),
                        },
                        Err(e) => FailureKind::Malformed(e.to_string()),
                    },
                    Err(e) => FailureKind::Transport(e.to_string()),
                },
                Err(ureq::Error::Status(code, resp)) => {
                    FailureKind::Status { code, body: resp.into_string().unwrap_or_default() }
                }
                Err(ureq::Error::Transport(t)) => FailureKind::Transport(t.to_string()),
            };
            if attempt < attempts {
                warn!("{request_id} {path}: attempt {attempt}/{attempts} failed: {kind}");
            } else {
                debug!("{request_id} {path}: giving up: {kind}");
            }
            last = Some(kind);
        }
        Err(ServiceError {
            request_id,
            endpoint: path.to_string(),
            attempts,
            kind: last.expect("at least one attempt"),
        })
    }
}
