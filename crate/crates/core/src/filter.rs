//! Entailment-threshold cleaning of reference summaries.
//!
//! Each summary is segmented; every sentence is scored as a hypothesis
//! against the linearized chart as premise, and kept only when its score is
//! strictly greater than the threshold. Kept sentences are reassembled in
//! their original order. A record that loses every sentence is either
//! dropped or reduced to its best-scoring sentence, depending on the
//! [`EmptyPolicy`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, BatchError, EntailmentBackend, EntailmentScore, ScoringRequest};
use crate::linearize::{LinearizeError, linearize};
use crate::model::{ChartRecord, Corpus, LinearizationSpec};
use crate::par::try_map_ordered;
use crate::segment::{SegmentedSummary, Segmenter};

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyPolicy {
    #[default]
    DropRecord,
    KeepBest,
}

impl EmptyPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drop" | "drop_record" | "drop-record" => Some(EmptyPolicy::DropRecord),
            "keep-best" | "keep_best" => Some(EmptyPolicy::KeepBest),
            _ => None,
        }
    }
}

impl fmt::Display for EmptyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmptyPolicy::DropRecord => "drop",
            EmptyPolicy::KeepBest => "keep-best",
        })
    }
}

/// Which empty-summary handling, if any, was applied to a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliedPolicy {
    None,
    DropRecord,
    KeepBest,
}

/// What to do when a record cannot be scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnError {
    #[default]
    Abort,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub sentence_index: usize,
    pub sentence: String,
    pub score: EntailmentScore,
    /// `score > threshold`.
    pub kept: bool,
    pub threshold: f64,
}

impl FilterDecision {
    pub fn new(sentence_index: usize, sentence: String, score: EntailmentScore, threshold: f64) -> Self {
        FilterDecision { sentence_index, sentence, score, kept: score.value() > threshold, threshold }
    }
}

/// Audit entry for one record.
///
/// `cleaned_summary` holds the sentences that passed the threshold, plus the
/// `rescued_index` sentence when the keep-best policy applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredRecord {
    pub id: String,
    pub decisions: Vec<FilterDecision>,
    pub cleaned_summary: String,
    pub empty_policy_applied: AppliedPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescued_index: Option<usize>,
}

impl FilteredRecord {
    pub fn dropped(&self) -> bool {
        self.empty_policy_applied == AppliedPolicy::DropRecord
    }

    pub fn kept_count(&self) -> usize {
        self.decisions.iter().filter(|d| d.kept).count()
    }
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("parallelism must be at least 1")]
    BadParallelism,
    #[error("record `{id}` has an empty summary")]
    EmptySummary { id: String },
    #[error("record `{id}`: {source}")]
    Linearize { id: String, source: LinearizeError },
    #[error("record `{id}`: {source}")]
    Request { id: String, source: BackendError },
    #[error("record `{id}`, sentence {}: {}", .source.index, .source.source)]
    Backend { id: String, source: BatchError },
}

impl FilterError {
    pub fn is_backend(&self) -> bool {
        matches!(self, FilterError::Backend { .. })
    }
}

/// Histogram plus kept/discarded means over a set of decisions.
///
/// Means are `None` when their population is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub sentences_total: usize,
    pub sentences_kept: usize,
    pub sentences_discarded: usize,
    pub score_mean_kept: Option<f64>,
    pub score_mean_discarded: Option<f64>,
    /// Counts over `[0, 0.1), [0.1, 0.2), ... [0.9, 1.0]`.
    pub histogram: [usize; HISTOGRAM_BINS],
}

pub fn calibration_report(decisions: &[FilterDecision]) -> CalibrationReport {
    let mean = |kept: bool| {
        let scores: Vec<f64> = decisions.iter().filter(|d| d.kept == kept).map(|d| d.score.value()).collect();
        (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
    };
    let mut histogram = [0usize; HISTOGRAM_BINS];
    for d in decisions {
        let bin = ((d.score.value() * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    let kept = decisions.iter().filter(|d| d.kept).count();
    CalibrationReport {
        sentences_total: decisions.len(),
        sentences_kept: kept,
        sentences_discarded: decisions.len() - kept,
        score_mean_kept: mean(true),
        score_mean_discarded: mean(false),
        histogram,
    }
}

/// Corpus-level filtering statistics.
///
/// `records_unchanged`, `records_modified` and `records_emptied` partition
/// the successfully filtered records by how many sentences passed the
/// threshold (all, some, none). Sentence counts follow the threshold only;
/// a sentence kept by the keep-best policy counts as discarded and as
/// rescued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub threshold: f64,
    pub records_total: usize,
    pub records_unchanged: usize,
    pub records_modified: usize,
    pub records_emptied: usize,
    pub records_dropped: usize,
    pub records_failed: usize,
    pub sentences_rescued: usize,
    #[serde(flatten)]
    pub calibration: CalibrationReport,
}

impl FilterStats {
    pub fn from_records(records: &[FilteredRecord], threshold: f64, failed: usize) -> Self {
        let mut stats = FilterStats {
            threshold,
            records_total: records.len(),
            records_unchanged: 0,
            records_modified: 0,
            records_emptied: 0,
            records_dropped: 0,
            records_failed: failed,
            sentences_rescued: 0,
            calibration: calibration_report(&[]),
        };
        for r in records {
            match r.kept_count() {
                0 => stats.records_emptied += 1,
                k if k == r.decisions.len() => stats.records_unchanged += 1,
                _ => stats.records_modified += 1,
            }
            stats.records_dropped += usize::from(r.dropped());
            stats.sentences_rescued += usize::from(r.rescued_index.is_some());
        }
        let all: Vec<FilterDecision> = records.iter().flat_map(|r| r.decisions.iter().cloned()).collect();
        stats.calibration = calibration_report(&all);
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub spec: LinearizationSpec,
    pub threshold: f64,
    pub empty_policy: EmptyPolicy,
    pub on_error: OnError,
    pub parallelism: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            spec: LinearizationSpec::proposed(),
            threshold: DEFAULT_THRESHOLD,
            empty_policy: EmptyPolicy::DropRecord,
            on_error: OnError::Abort,
            parallelism: 1,
        }
    }
}

impl FilterConfig {
    fn check(&self) -> Result<(), FilterError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(FilterError::BadThreshold(self.threshold));
        }
        if self.parallelism == 0 {
            return Err(FilterError::BadParallelism);
        }
        Ok(())
    }
}

pub struct Filter<'a, B: EntailmentBackend + ?Sized> {
    backend: &'a B,
    segmenter: Segmenter,
    config: FilterConfig,
}

impl<'a, B: EntailmentBackend + ?Sized> Filter<'a, B> {
    pub fn new(backend: &'a B, config: FilterConfig) -> Result<Self, FilterError> {
        config.check()?;
        Ok(Filter { backend, segmenter: Segmenter::default(), config })
    }

    pub fn with_segmenter(mut self, segmenter: Segmenter) -> Self {
        self.segmenter = segmenter;
        self
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Filters one record's summary. `parallelism` bounds concurrent scoring
    /// requests for this record.
    pub fn filter_record(&self, record: &ChartRecord, parallelism: usize) -> Result<FilteredRecord, FilterError> {
        let id = || record.id.clone();
        let seg = self.segmenter.segment(&record.summary);
        if seg.is_empty() {
            return Err(FilterError::EmptySummary { id: id() });
        }
        let premise =
            linearize(record, &self.config.spec).map_err(|source| FilterError::Linearize { id: id(), source })?.text;
        let requests = seg
            .sentences
            .iter()
            .map(|s| ScoringRequest::new(premise.as_str(), s.as_str()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| FilterError::Request { id: id(), source })?;
        let scores = self
            .backend
            .score_batch(&requests, parallelism)
            .map_err(|source| FilterError::Backend { id: id(), source })?;

        let threshold = self.config.threshold;
        let decisions: Vec<FilterDecision> = seg
            .sentences
            .iter()
            .zip(scores)
            .enumerate()
            .map(|(i, (s, score))| FilterDecision::new(i, s.clone(), score, threshold))
            .collect();

        let mut keep: Vec<bool> = decisions.iter().map(|d| d.kept).collect();
        let mut applied = AppliedPolicy::None;
        let mut rescued_index = None;
        if !keep.iter().any(|&k| k) {
            match self.config.empty_policy {
                EmptyPolicy::DropRecord => applied = AppliedPolicy::DropRecord,
                EmptyPolicy::KeepBest => {
                    // Highest score; the first index wins ties.
                    let best = decisions
                        .iter()
                        .fold(0, |best, d| if d.score > decisions[best].score { d.sentence_index } else { best });
                    keep[best] = true;
                    applied = AppliedPolicy::KeepBest;
                    rescued_index = Some(best);
                }
            }
        }
        let cleaned = SegmentedSummary {
            sentences: seg.sentences.iter().zip(&keep).filter(|(_, k)| **k).map(|(s, _)| s.clone()).collect(),
            joiner: seg.joiner.clone(),
        };
        Ok(FilteredRecord {
            id: id(),
            decisions,
            cleaned_summary: crate::segment::reassemble(&cleaned),
            empty_policy_applied: applied,
            rescued_index,
        })
    }

    /// Filters every record under the configured parallelism.
    pub fn filter_corpus(&self, corpus: &Corpus) -> Result<FilterOutput, FilterError> {
        let results: Vec<Result<FilteredRecord, FilterError>> =
            try_map_ordered(&corpus.records, self.config.parallelism, |_, r| match self.filter_record(r, 1) {
                Err(e) if self.config.on_error == OnError::Abort => Err(e),
                other => Ok(other),
            })
            .map_err(|(_, e)| e)?;

        let mut records = Vec::new();
        let mut audit = Vec::new();
        let mut failures = Vec::new();
        for (record, result) in corpus.records.iter().zip(results) {
            match result {
                Ok(f) => {
                    if !f.dropped() {
                        records.push(ChartRecord { summary: f.cleaned_summary.clone(), ..record.clone() });
                    }
                    audit.push(f);
                }
                Err(e) => {
                    log::warn!("skipping record `{}`: {e}", record.id);
                    failures.push(RecordFailure { id: record.id.clone(), error: e.to_string() });
                }
            }
        }
        let stats = FilterStats::from_records(&audit, self.config.threshold, failures.len());
        Ok(FilterOutput { corpus: Corpus::new(records, corpus.split_tag), audit, failures, stats })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub corpus: Corpus,
    pub audit: Vec<FilteredRecord>,
    pub failures: Vec<RecordFailure>,
    pub stats: FilterStats,
}

/// One-shot form of [`Filter::filter_record`].
pub fn filter_record<B: EntailmentBackend + ?Sized>(
    record: &ChartRecord,
    spec: &LinearizationSpec,
    backend: &B,
    threshold: f64,
    empty_policy: EmptyPolicy,
) -> Result<FilteredRecord, FilterError> {
    let config = FilterConfig { spec: spec.clone(), threshold, empty_policy, ..FilterConfig::default() };
    Filter::new(backend, config)?.filter_record(record, 1)
}

/// One-shot form of [`Filter::filter_corpus`] that aborts on the first failure.
pub fn filter_corpus<B: EntailmentBackend + ?Sized>(
    corpus: &Corpus,
    spec: &LinearizationSpec,
    backend: &B,
    threshold: f64,
    empty_policy: EmptyPolicy,
    parallelism: usize,
) -> Result<(Corpus, Vec<FilteredRecord>, FilterStats), FilterError> {
    let config = FilterConfig { spec: spec.clone(), threshold, empty_policy, on_error: OnError::Abort, parallelism };
    let out = Filter::new(backend, config)?.filter_corpus(corpus)?;
    Ok((out.corpus, out.audit, out.stats))
}
