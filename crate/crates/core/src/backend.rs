//! Entailment scoring backends.
//!
//! All backends map a (premise, hypothesis) pair to a score in `[0, 1]` and
//! are deterministic for a fixed configuration:
//!
//! * [`MockBackend`]: a constant, optionally overridden per hypothesis.
//! * [`LexicalBackend`]: the fraction of hypothesis content tokens that also
//!   occur in the premise. A mechanical stand-in, not an NLI model.
//! * [`RemoteBackend`]: client for the model service (`/v1/score`,
//!   `/v1/score_batch`, `/v1/health`).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::try_map_ordered;
use crate::service::{ServiceClient, ServiceConfig, ServiceError};

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

static STOPWORDS: LazyLock<HashSet<String>> = LazyLock::new(|| parse_word_list(DEFAULT_STOPWORDS));

/// Entailment probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntailmentScore(f64);

impl EntailmentScore {
    /// Clamps into `[0, 1]`. NaN becomes 0.
    pub fn new(value: f64) -> Self {
        if value.is_nan() { EntailmentScore(0.0) } else { EntailmentScore(value.clamp(0.0, 1.0)) }
    }

    /// Reads a score reported by a service. Values above 1 are taken to be
    /// on a 0-100 scale (87 becomes 0.87); the result is then clamped.
    /// Non-finite values are rejected.
    pub fn from_service(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        let v = if value > 1.0 { value / 100.0 } else { value };
        Some(Self::new(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for EntailmentScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringRequest {
    pub premise: String,
    pub hypothesis: String,
}

impl ScoringRequest {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Result<Self, BackendError> {
        let req = ScoringRequest { premise: premise.into(), hypothesis: hypothesis.into() };
        if req.premise.trim().is_empty() {
            return Err(BackendError::EmptyField("premise"));
        }
        if req.hypothesis.trim().is_empty() {
            return Err(BackendError::EmptyField("hypothesis"));
        }
        Ok(req)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("scoring request has an empty {0}")]
    EmptyField(&'static str),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("batch element {index} failed: {source}")]
pub struct BatchError {
    pub index: usize,
    #[source]
    pub source: BackendError,
}

pub trait EntailmentBackend: Send + Sync {
    fn score(&self, request: &ScoringRequest) -> Result<EntailmentScore, BackendError>;

    /// Scores every request on at most `parallelism` workers. The output is
    /// in input order and equals scoring each request on its own.
    fn score_batch(&self, requests: &[ScoringRequest], parallelism: usize) -> Result<Vec<EntailmentScore>, BatchError> {
        try_map_ordered(requests, parallelism, |_, r| self.score(r))
            .map_err(|(index, source)| BatchError { index, source })
    }

    /// Short human-readable identity for run manifests.
    fn describe(&self) -> String;
}

impl<B: EntailmentBackend + ?Sized> EntailmentBackend for Box<B> {
    fn score(&self, request: &ScoringRequest) -> Result<EntailmentScore, BackendError> {
        (**self).score(request)
    }

    fn score_batch(&self, requests: &[ScoringRequest], parallelism: usize) -> Result<Vec<EntailmentScore>, BatchError> {
        (**self).score_batch(requests, parallelism)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    default: EntailmentScore,
    by_hypothesis: HashMap<String, EntailmentScore>,
}

impl MockBackend {
    pub fn constant(value: f64) -> Self {
        MockBackend { default: EntailmentScore::new(value), by_hypothesis: HashMap::new() }
    }

    /// Returns `value` for requests whose hypothesis equals `hypothesis`.
    pub fn with_score(mut self, hypothesis: impl Into<String>, value: f64) -> Self {
        self.by_hypothesis.insert(hypothesis.into(), EntailmentScore::new(value));
        self
    }
}

impl EntailmentBackend for MockBackend {
    fn score(&self, request: &ScoringRequest) -> Result<EntailmentScore, BackendError> {
        Ok(*self.by_hypothesis.get(&request.hypothesis).unwrap_or(&self.default))
    }

    fn describe(&self) -> String {
        if self.by_hypothesis.is_empty() {
            format!("mock:{}", self.default)
        } else {
            format!("mock:{}+{} overrides", self.default, self.by_hypothesis.len())
        }
    }
}

fn parse_word_list(list: &str) -> HashSet<String> {
    list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_lowercase).collect()
}

/// Token-coverage oracle.
///
/// Both texts are lowercased and split on whitespace; every character that is
/// not alphanumeric is deleted from each token, empty tokens and stopwords are
/// dropped. The score is the number of hypothesis tokens (counted with
/// repetition) that occur anywhere in the premise, divided by the number of
/// hypothesis tokens. A hypothesis without content tokens scores 0.
#[derive(Debug, Clone)]
pub struct LexicalBackend {
    stopwords: HashSet<String>,
}

impl LexicalBackend {
    pub fn new() -> Self {
        LexicalBackend { stopwords: STOPWORDS.clone() }
    }

    pub fn with_stopwords(list: &str) -> Self {
        LexicalBackend { stopwords: parse_word_list(list) }
    }

    pub fn content_tokens(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split_whitespace()
            .map(|t| t.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
            .filter(|t| !t.is_empty() && !self.stopwords.contains(t))
            .collect()
    }

    pub fn coverage(&self, premise: &str, hypothesis: &str) -> f64 {
        let hyp = self.content_tokens(hypothesis);
        if hyp.is_empty() {
            return 0.0;
        }
        let premise: HashSet<String> = self.content_tokens(premise).into_iter().collect();
        let covered = hyp.iter().filter(|t| premise.contains(*t)).count();
        covered as f64 / hyp.len() as f64
    }
}

impl Default for LexicalBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl EntailmentBackend for LexicalBackend {
    fn score(&self, request: &ScoringRequest) -> Result<EntailmentScore, BackendError> {
        Ok(EntailmentScore::new(self.coverage(&request.premise, &request.hypothesis)))
    }

    fn describe(&self) -> String {
        format!("lexical ({} stopwords)", self.stopwords.len())
    }
}

#[derive(Serialize)]
struct ScoreBody<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    entailment: f64,
}

#[derive(Serialize)]
struct BatchBody<'a> {
    pairs: Vec<ScoreBody<'a>>,
}

#[derive(Deserialize)]
struct BatchResponse {
    entailments: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
pub struct Health {
    pub status: String,
    #[serde(default)]
    pub model: Option<String>,
}

/// HTTP client for the entailment service.
///
/// `batch_size` > 1 routes [`EntailmentBackend::score_batch`] through
/// `/v1/score_batch` in chunks of that size; otherwise every request goes to
/// `/v1/score`. At most `parallelism` requests are in flight.
pub struct RemoteBackend {
    client: ServiceClient,
    batch_size: usize,
}

impl RemoteBackend {
    pub fn new(config: ServiceConfig) -> Self {
        RemoteBackend { client: ServiceClient::new(config), batch_size: 16 }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        self.client.config()
    }

    pub fn health(&self) -> Result<Health, ServiceError> {
        self.client.get_json("/v1/health")
    }

    fn score_chunk(&self, chunk: &[ScoringRequest]) -> Result<Vec<EntailmentScore>, BackendError> {
        let body = BatchBody {
            pairs: chunk.iter().map(|r| ScoreBody { premise: &r.premise, hypothesis: &r.hypothesis }).collect(),
        };
        let expected = chunk.len();
        let resp: BatchResponse = self.client.post_json_checked("/v1/score_batch", &body, |r: &BatchResponse| {
            if r.entailments.len() != expected {
                return Err(format!("expected {expected} entailments, got {}", r.entailments.len()));
            }
            match r.entailments.iter().find(|v| !v.is_finite()) {
                Some(v) => Err(format!("non-finite entailment {v}")),
                None => Ok(()),
            }
        })?;
        Ok(resp.entailments.into_iter().filter_map(EntailmentScore::from_service).collect())
    }
}

impl EntailmentBackend for RemoteBackend {
    fn score(&self, request: &ScoringRequest) -> Result<EntailmentScore, BackendError> {
        let body = ScoreBody { premise: &request.premise, hypothesis: &request.hypothesis };
        let resp: ScoreResponse = self.client.post_json_checked("/v1/score", &body, |r: &ScoreResponse| {
            if r.entailment.is_finite() { Ok(()) } else { Err(format!("non-finite entailment {}", r.entailment)) }
        })?;
        Ok(EntailmentScore::from_service(resp.entailment).expect("checked finite"))
    }

    fn score_batch(&self, requests: &[ScoringRequest], parallelism: usize) -> Result<Vec<EntailmentScore>, BatchError> {
        if self.batch_size <= 1 {
            return try_map_ordered(requests, parallelism, |_, r| self.score(r))
                .map_err(|(index, source)| BatchError { index, source });
        }
        let chunks: Vec<&[ScoringRequest]> = requests.chunks(self.batch_size).collect();
        let scored = try_map_ordered(&chunks, parallelism, |_, c| self.score_chunk(c))
            .map_err(|(chunk, source)| BatchError { index: chunk * self.batch_size, source })?;
        Ok(scored.into_iter().flatten().collect())
    }

    fn describe(&self) -> String {
        format!("remote {}", self.client.config().base_url)
    }
}
