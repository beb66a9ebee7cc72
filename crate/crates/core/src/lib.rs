//! Corpus preprocessing and evaluation for chart summarization.
//!
//! The crate covers the whole data side of a chart-to-text pipeline:
//! loading and splitting corpora ([`ingest`]), turning charts into model
//! inputs ([`linearize`]), cleaning reference summaries by entailment
//! filtering ([`filter`] over a [`backend`]), injecting synthetic ungrounded
//! sentences ([`noise`]) and scoring outputs ([`metrics`]).

pub mod backend;
pub mod filter;
pub mod ingest;
pub mod linearize;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod par;
pub mod rng;
pub mod segment;
pub mod service;
pub mod synth;

pub use linearize::{LinearizeError, LinearizedInput, linearize};
pub use model::{ChartRecord, ChartType, Corpus, Format, LinearizationSpec, Series, SplitTag, Violation};
pub use segment::{SegmentedSummary, Segmenter, normalize_whitespace, reassemble, segment};
