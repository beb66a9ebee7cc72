//! Synthetic ungrounded-sentence injection.
//!
//! For a record, a sentence of its summary is chosen as the prompt, the
//! generator continues it with one sentence, and that sentence is inserted
//! at a random position among the original sentences. Both draws come from
//! [`SeededRng::for_record`], so each record's outcome depends only on the
//! run seed and its id.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChartRecord, Corpus};
use crate::par::try_map_ordered;
use crate::rng::SeededRng;
use crate::segment::{SegmentedSummary, Segmenter, reassemble};
use crate::service::{ServiceClient, ServiceConfig, ServiceError};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("generator returned {0}")]
    BadOutput(String),
}

pub trait TextGenerator: Send + Sync {
    /// Continues `prompt` with a single sentence.
    fn generate(&self, prompt: &str) -> Result<String, GenerateError>;

    fn describe(&self) -> String;
}

/// Deterministic template generator.
///
/// Picks one of a fixed set of sentences by hashing the prompt, so the same
/// prompt always yields the same sentence. A single fixed sentence can be
/// configured instead with [`StubGenerator::fixed`].
#[derive(Debug, Clone)]
pub struct StubGenerator {
    sentences: Vec<String>,
}

const STUB_SENTENCES: &[&str] = &[
    "The figures were collected in a nationwide online survey.",
    "Experts expect this trend to continue over the next decade.",
    "The data was published by the national statistics office.",
    "Respondents were able to select more than one answer.",
    "The numbers have been adjusted for seasonal effects.",
    "Similar surveys were carried out in several European countries.",
    "Analysts attribute the change mainly to rising consumer demand.",
    "All values were rounded to the nearest whole number.",
];

impl StubGenerator {
    pub fn new() -> Self {
        StubGenerator { sentences: STUB_SENTENCES.iter().map(|s| s.to_string()).collect() }
    }

    pub fn fixed(sentence: impl Into<String>) -> Self {
        StubGenerator { sentences: vec![sentence.into()] }
    }
}

impl Default for StubGenerator {
    fn default() -> Self {
        Self::new()
    }
}

impl TextGenerator for StubGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GenerateError> {
        let i = (crate::rng::stable_hash(prompt) % self.sentences.len() as u64) as usize;
        Ok(self.sentences[i].clone())
    }

    fn describe(&self) -> String {
        format!("stub ({} sentences)", self.sentences.len())
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Client for the service's `/v1/generate` endpoint.
pub struct RemoteGenerator {
    client: ServiceClient,
}

impl RemoteGenerator {
    pub fn new(config: ServiceConfig) -> Self {
        RemoteGenerator { client: ServiceClient::new(config) }
    }
}

impl TextGenerator for RemoteGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GenerateError> {
        let resp: GenerateResponse = self.client.post_json("/v1/generate", &GenerateBody { prompt })?;
        Ok(resp.text)
    }

    fn describe(&self) -> String {
        format!("remote {}", self.client.config().base_url)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub record_id: String,
    pub prompt_index: usize,
    pub insert_index: usize,
    pub generated: String,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("record `{id}` has an empty summary")]
    EmptySummary { id: String },
    #[error("record `{id}`: {source}")]
    Generator { id: String, source: GenerateError },
    #[error("cannot inject noise into an empty corpus")]
    EmptyCorpus,
    #[error("fraction {0} is outside (0, 1]")]
    BadFraction(f64),
}

impl NoiseError {
    pub fn is_generator(&self) -> bool {
        matches!(self, NoiseError::Generator { .. })
    }
}

pub struct NoiseInjector<'a, G: TextGenerator + ?Sized> {
    generator: &'a G,
    segmenter: Segmenter,
}

impl<'a, G: TextGenerator + ?Sized> NoiseInjector<'a, G> {
    pub fn new(generator: &'a G) -> Self {
        NoiseInjector { generator, segmenter: Segmenter::default() }
    }

    pub fn inject(&self, record: &ChartRecord, seed: u64) -> Result<(ChartRecord, NoiseEvent), NoiseError> {
        let id = || record.id.clone();
        let seg = self.segmenter.segment(&record.summary);
        if seg.is_empty() {
            return Err(NoiseError::EmptySummary { id: id() });
        }
        let n = seg.len();
        let mut rng = SeededRng::for_record(seed, &record.id);
        let prompt_index = rng.index(n);
        let insert_index = rng.index(n + 1);

        let generated = self
            .generator
            .generate(&seg.sentences[prompt_index])
            .map_err(|source| NoiseError::Generator { id: id(), source })?;
        let generated_seg = self.segmenter.segment(&generated);
        if generated_seg.len() != 1 {
            return Err(NoiseError::Generator {
                id: id(),
                source: GenerateError::BadOutput(format!(
                    "{} sentences, expected 1: {generated:?}",
                    generated_seg.len()
                )),
            });
        }
        let generated = generated_seg.sentences.into_iter().next().unwrap();

        let mut sentences = seg.sentences;
        sentences.insert(insert_index, generated.clone());
        let summary = reassemble(&SegmentedSummary { sentences, joiner: seg.joiner });
        let event = NoiseEvent { record_id: id(), prompt_index, insert_index, generated, seed };
        Ok((ChartRecord { summary, ..record.clone() }, event))
    }

    /// Noises `ceil(fraction * N)` records chosen by a seeded shuffle. The
    /// output corpus keeps input order; events are listed in corpus order.
    pub fn inject_corpus(
        &self,
        corpus: &Corpus,
        seed: u64,
        fraction: f64,
        parallelism: usize,
    ) -> Result<(Corpus, Vec<NoiseEvent>), NoiseError> {
        if corpus.is_empty() {
            return Err(NoiseError::EmptyCorpus);
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(NoiseError::BadFraction(fraction));
        }
        let selected = select(corpus.len(), seed, fraction);
        let results = try_map_ordered(&corpus.records, parallelism, |i, r| {
            if selected[i] { self.inject(r, seed).map(|(r, e)| (r, Some(e))) } else { Ok((r.clone(), None)) }
        })
        .map_err(|(_, e)| e)?;
        let mut records = Vec::with_capacity(results.len());
        let mut events = Vec::new();
        for (r, e) in results {
            records.push(r);
            events.extend(e);
        }
        Ok((Corpus::new(records, corpus.split_tag), events))
    }
}

/// Membership mask for the first `ceil(fraction * n)` positions of a seeded
/// shuffle of `0..n`.
fn select(n: usize, seed: u64, fraction: f64) -> Vec<bool> {
    let k = ((fraction * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let mut mask = vec![false; n];
    for &i in &order[..k] {
        mask[i] = true;
    }
    mask
}

pub fn inject_noise<G: TextGenerator + ?Sized>(
    record: &ChartRecord,
    generator: &G,
    seed: u64,
) -> Result<(ChartRecord, NoiseEvent), NoiseError> {
    NoiseInjector::new(generator).inject(record, seed)
}

pub fn inject_corpus<G: TextGenerator + ?Sized>(
    corpus: &Corpus,
    generator: &G,
    seed: u64,
    fraction: f64,
) -> Result<(Corpus, Vec<NoiseEvent>), NoiseError> {
    NoiseInjector::new(generator).inject_corpus(corpus, seed, fraction, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChartType, Series, SplitTag};
    use crate::segment::segment;

    fn rec(id: &str, summary: &str) -> ChartRecord {
        ChartRecord {
            id: id.into(),
            title: "T".into(),
            chart_type: ChartType::Bar,
            x_label: "x".into(),
            y_labels: vec!["y".into()],
            series: vec![Series::new("y", vec![("a".into(), "1".into())])],
            summary: summary.into(),
        }
    }

    #[test]
    fn three_sentences_plus_noise() {
        let r = rec("r1", "First one. Second one. Third one.");
        let (out, ev) = inject_noise(&r, &StubGenerator::fixed("NOISE."), 11).unwrap();
        let seg = segment(&out.summary);
        assert_eq!(seg.len(), 4);
        assert_eq!(seg.sentences[ev.insert_index], "NOISE.");
        let rest: Vec<&String> = seg.sentences.iter().filter(|s| *s != "NOISE.").collect();
        assert_eq!(rest, ["First one.", "Second one.", "Third one."]);
        assert!(ev.prompt_index < 3 && ev.insert_index <= 3);
        assert_eq!(inject_noise(&r, &StubGenerator::fixed("NOISE."), 11).unwrap(), (out, ev));
    }

    #[test]
    fn single_sentence_insert_positions() {
        let r = rec("solo", "Only sentence.");
        // Enumerate what the per-record stream yields for each seed and
        // check the injector agrees.
        for seed in 0..20u64 {
            let mut rng = SeededRng::for_record(seed, "solo");
            assert_eq!(rng.index(1), 0);
            let expected_insert = rng.index(2);
            let (out, ev) = inject_noise(&r, &StubGenerator::fixed("NOISE."), seed).unwrap();
            assert!(ev.insert_index <= 1);
            assert_eq!(ev.insert_index, expected_insert);
            assert_eq!(segment(&out.summary).len(), 2);
        }
    }

    #[test]
    fn multi_sentence_generation_is_rejected() {
        let r = rec("r", "One. Two.");
        let err = inject_noise(&r, &StubGenerator::fixed("A. B."), 1).unwrap_err();
        assert!(err.is_generator());
        let err = inject_noise(&rec("e", " "), &StubGenerator::new(), 1).unwrap_err();
        assert!(matches!(err, NoiseError::EmptySummary { .. }));
    }

    #[test]
    fn corpus_fraction_counts() {
        let c = Corpus::new((0..10).map(|i| rec(&format!("r{i}"), "A b. C d.")).collect(), SplitTag::Train);
        let g = StubGenerator::new();
        let (out, ev) = inject_corpus(&c, &g, 5, 1.0).unwrap();
        assert_eq!(ev.len(), 10);
        assert_eq!(out.len(), 10);
        let (_, ev) = inject_corpus(&c, &g, 5, 0.5).unwrap();
        assert_eq!(ev.len(), 5);
        let (_, ev) = inject_corpus(&c, &g, 5, 0.01).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(inject_corpus(&c, &g, 5, 0.5).unwrap(), inject_corpus(&c, &g, 5, 0.5).unwrap());
        assert!(matches!(inject_corpus(&c, &g, 5, 0.0), Err(NoiseError::BadFraction(_))));
        assert!(matches!(inject_corpus(&Corpus::default(), &g, 5, 1.0), Err(NoiseError::EmptyCorpus)));
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = Corpus::new((0..30).map(|i| rec(&format!("r{i}"), "A b. C d. E f.")).collect(), SplitTag::Train);
        let g = StubGenerator::new();
        let inj = NoiseInjector::new(&g);
        assert_eq!(inj.inject_corpus(&c, 3, 0.7, 1).unwrap(), inj.inject_corpus(&c, 3, 0.7, 6).unwrap());
    }
}
