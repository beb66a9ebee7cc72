use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use chartsum_core::backend::{EntailmentBackend, Health, LexicalBackend, MockBackend, RemoteBackend};
use chartsum_core::filter::{Filter, FilterConfig};
use chartsum_core::ingest::{IngestError, SplitRatios, load_canonical, load_tabular, split_corpus, write_canonical};
use chartsum_core::metrics::evaluate;
use chartsum_core::noise::{NoiseInjector, RemoteGenerator, StubGenerator, TextGenerator};
use chartsum_core::service::{ServiceClient, ServiceConfig};
use chartsum_core::{Corpus, Format, SplitTag, linearize, segment};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BackendKind, Command, EvaluateArgs, FilterArgs, GeneratorKind, IngestArgs, LinearizeArgs, NoiseArgs, ServiceArgs,
    SplitArgs, StatsArgs,
};
use crate::output::manifest_path_for;
use crate::{Failure, Run};

pub fn name(command: &Command) -> &'static str {
    match command {
        Command::Ingest(_) => "ingest",
        Command::Split(_) => "split",
        Command::Linearize(_) => "linearize",
        Command::Filter(_) => "filter",
        Command::InjectNoise(_) => "inject-noise",
        Command::Evaluate(_) => "evaluate",
        Command::Stats(_) => "stats",
    }
}

pub fn dispatch(command: Command, run: &mut Run) -> Result<(), Failure> {
    match command {
        Command::Ingest(a) => ingest(a, run),
        Command::Split(a) => split(a, run),
        Command::Linearize(a) => linearize_cmd(a, run),
        Command::Filter(a) => filter(a, run),
        Command::InjectNoise(a) => inject_noise(a, run),
        Command::Evaluate(a) => evaluate_cmd(a, run),
        Command::Stats(a) => stats(a, run),
    }
}

fn load(path: &Path) -> Result<Corpus, Failure> {
    let corpus = load_canonical(path).map_err(|e| Failure::data(anyhow!("{}: {e}", path.display())))?;
    log::info!("loaded {} records from {}", corpus.len(), path.display());
    Ok(corpus)
}

fn canonical_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    write_canonical(corpus, &mut buf).expect("writing to memory");
    buf
}

fn service_config(s: &ServiceArgs) -> ServiceConfig {
    ServiceConfig {
        base_url: s.base_url.clone(),
        timeout_ms: s.timeout_ms,
        retries: s.retries,
        backoff_ms: s.backoff_ms,
    }
}

/// Fails fast with a backend error when the service is unreachable.
fn check_health(config: &ServiceConfig) -> Result<Health, Failure> {
    let health: Health = ServiceClient::new(config.clone())
        .get_json("/v1/health")
        .map_err(|e| Failure::backend(anyhow!("service health check failed: {e}")))?;
    log::info!("service at {} is {} (model {:?})", config.base_url, health.status, health.model);
    Ok(health)
}

fn ingest(a: IngestArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = Some(manifest_path_for(&a.out));
    run.config = json!({ "input": a.input, "meta": a.meta, "out": a.out });
    run.input(&a.input)?;
    let corpus = match &a.meta {
        Some(meta) => {
            run.input(meta)?;
            load_tabular(&a.input, meta).map_err(Failure::data)?
        }
        None => load(&a.input)?,
    };
    if corpus.is_empty() {
        return Err(Failure::data(anyhow!("{}: no records", a.input.display())));
    }
    run.staged.add(&a.out, canonical_bytes(&corpus));
    run.summary = Some(json!({ "records": corpus.len() }));
    Ok(())
}

/// `out/` + `train` gives `out/train.jsonl`; `out/c2t` gives `out/c2t.train.jsonl`.
fn prefixed(prefix: &str, name: &str) -> PathBuf {
    if prefix.is_empty() || prefix.ends_with(['/', '\\', '.', '_', '-']) {
        PathBuf::from(format!("{prefix}{name}"))
    } else {
        PathBuf::from(format!("{prefix}.{name}"))
    }
}

fn split(a: SplitArgs, run: &mut Run) -> Result<(), Failure> {
    let outs = ["train", "validation", "test"].map(|s| prefixed(&a.out_prefix, &format!("{s}.jsonl")));
    run.manifest_path = Some(prefixed(&a.out_prefix, "manifest.json"));
    let ratios = SplitRatios::parse(&a.ratios).map_err(Failure::usage)?;
    run.config = json!({
        "input": a.input,
        "ratios": { "train": ratios.train, "validation": ratios.validation, "test": ratios.test },
        "seed": a.seed,
        "out_prefix": a.out_prefix,
    });
    run.input(&a.input)?;
    let corpus = load(&a.input)?;
    let (train, validation, test) = match split_corpus(&corpus, &ratios, a.seed) {
        Err(e @ IngestError::AlreadySplit(_)) => return Err(Failure::data(anyhow!("{}: {e}", a.input.display()))),
        other => other.map_err(Failure::data)?,
    };
    for (path, part) in outs.iter().zip([&train, &validation, &test]) {
        run.staged.add(path, canonical_bytes(part));
    }
    run.summary = Some(json!({ "train": train.len(), "validation": validation.len(), "test": test.len() }));
    Ok(())
}

#[derive(Serialize)]
struct LinearizedLine<'a> {
    id: &'a str,
    format: Format,
    text: String,
}

fn linearize_cmd(a: LinearizeArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = Some(manifest_path_for(&a.out));
    let spec = a.spec.resolve();
    run.config = json!({ "input": a.input, "spec": spec, "out": a.out });
    run.input(&a.input)?;
    let corpus = load(&a.input)?;
    let mut lines = Vec::with_capacity(corpus.len());
    for r in &corpus.records {
        let text = linearize(r, &spec).map_err(Failure::data)?.text;
        lines.push(LinearizedLine { id: &r.id, format: spec.format, text });
    }
    run.staged.jsonl(&a.out, &lines).map_err(Failure::data)?;
    run.summary = Some(json!({ "records": lines.len() }));
    Ok(())
}

fn filter(a: FilterArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = Some(manifest_path_for(&a.out));
    let config = FilterConfig {
        spec: a.spec.resolve(),
        threshold: a.threshold,
        empty_policy: a.empty_policy,
        on_error: a.on_error,
        parallelism: a.parallelism,
    };
    let service = service_config(&a.service);
    let mut backend_desc = serde_json::to_value(a.backend).expect("serializes");
    if a.backend == BackendKind::Remote {
        backend_desc["service"] = json!(service);
        backend_desc["batch_size"] = json!(a.batch_size);
    }
    run.config = json!({
        "input": a.input,
        "spec": config.spec,
        "threshold": config.threshold,
        "backend": backend_desc,
        "empty_policy": config.empty_policy,
        "on_error": config.on_error,
        "parallelism": config.parallelism,
        "out": a.out,
        "audit": a.audit,
    });
    run.input(&a.input)?;
    let corpus = load(&a.input)?;

    let mut model = None;
    let backend: Box<dyn EntailmentBackend> = match a.backend {
        BackendKind::Remote => {
            model = check_health(&service)?.model;
            Box::new(RemoteBackend::new(service).with_batch_size(a.batch_size))
        }
        BackendKind::Lexical => Box::new(LexicalBackend::new()),
        BackendKind::Mock { value } => Box::new(MockBackend::constant(value)),
    };
    log::info!("filtering with {} at threshold {}", backend.describe(), config.threshold);
    let filter = Filter::new(&backend, config).map_err(Failure::usage)?;
    let out = filter
        .filter_corpus(&corpus)
        .map_err(|e| if e.is_backend() { Failure::backend(e) } else { Failure::data(e) })?;

    run.staged.add(&a.out, canonical_bytes(&out.corpus));
    run.staged.jsonl(&a.audit, &out.audit).map_err(Failure::data)?;
    run.summary = Some(json!({
        "backend": backend.describe(),
        "model": model,
        "records_written": out.corpus.len(),
        "stats": out.stats,
        "failures": out.failures,
    }));
    Ok(())
}

fn inject_noise(a: NoiseArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = Some(manifest_path_for(&a.out));
    let service = service_config(&a.service);
    let mut generator_desc = json!({ "kind": a.generator });
    if a.generator == GeneratorKind::Remote {
        generator_desc["service"] = json!(service);
    }
    run.config = json!({
        "input": a.input,
        "generator": generator_desc,
        "seed": a.seed,
        "fraction": a.fraction,
        "parallelism": a.parallelism,
        "out": a.out,
        "events": a.events,
    });
    run.input(&a.input)?;
    let corpus = load(&a.input)?;

    let generator: Box<dyn TextGenerator> = match a.generator {
        GeneratorKind::Stub => Box::new(StubGenerator::new()),
        GeneratorKind::Remote => {
            check_health(&service)?;
            Box::new(RemoteGenerator::new(service))
        }
    };
    let (noised, events) = NoiseInjector::new(generator.as_ref())
        .inject_corpus(&corpus, a.seed, a.fraction, a.parallelism)
        .map_err(|e| if e.is_generator() { Failure::backend(e) } else { Failure::data(e) })?;

    run.staged.add(&a.out, canonical_bytes(&noised));
    run.staged.jsonl(&a.events, &events).map_err(Failure::data)?;
    run.summary = Some(json!({
        "generator": generator.describe(),
        "records": noised.len(),
        "records_noised": events.len(),
    }));
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = Some(manifest_path_for(&a.out));
    run.config = json!({ "hyp": a.hyp, "ref": a.reference, "out": a.out });
    run.input(&a.hyp)?;
    run.input(&a.reference)?;
    let report = evaluate(&a.hyp, &a.reference).map_err(Failure::data)?;
    log::info!("BLEU-4 {:.4}, ROUGE-2 F1 {:.4} over {} pairs", report.bleu4, report.rouge2_f1, report.pair_count);
    run.staged.json(&a.out, &report).map_err(Failure::data)?;
    run.summary =
        Some(json!({ "bleu4": report.bleu4, "rouge2_f1": report.rouge2_f1, "pair_count": report.pair_count }));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileStats {
    pub path: String,
    pub split: SplitTag,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub files: Vec<FileStats>,
    pub records_total: usize,
    pub records_by_split: BTreeMap<SplitTag, usize>,
    /// Number of summaries with each sentence count.
    pub sentence_count_distribution: BTreeMap<usize, usize>,
    pub mean_sentences: Option<f64>,
    pub mean_words: Option<f64>,
}

pub fn corpus_stats(corpora: &[(PathBuf, Corpus)]) -> CorpusStats {
    let mut stats = CorpusStats {
        files: Vec::new(),
        records_total: 0,
        records_by_split: BTreeMap::new(),
        sentence_count_distribution: BTreeMap::new(),
        mean_sentences: None,
        mean_words: None,
    };
    let (mut sentences, mut words) = (0usize, 0usize);
    for (path, corpus) in corpora {
        stats.files.push(FileStats {
            path: path.display().to_string(),
            split: corpus.split_tag,
            records: corpus.len(),
        });
        *stats.records_by_split.entry(corpus.split_tag).or_default() += corpus.len();
        stats.records_total += corpus.len();
        for r in &corpus.records {
            let n = segment(&r.summary).len();
            *stats.sentence_count_distribution.entry(n).or_default() += 1;
            sentences += n;
            words += r.summary.split_whitespace().count();
        }
    }
    if stats.records_total > 0 {
        stats.mean_sentences = Some(sentences as f64 / stats.records_total as f64);
        stats.mean_words = Some(words as f64 / stats.records_total as f64);
    }
    stats
}

fn print_stats(s: &CorpusStats) {
    for f in &s.files {
        println!("{:<10} {:>8}  {}", f.split.as_str(), f.records, f.path);
    }
    for (split, n) in &s.records_by_split {
        println!("total {:<10} {n}", split.as_str());
    }
    println!("records          {}", s.records_total);
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    println!("mean sentences   {}", fmt(s.mean_sentences));
    println!("mean words       {}", fmt(s.mean_words));
    println!("sentences  summaries");
    for (n, count) in &s.sentence_count_distribution {
        println!("{n:>9}  {count}");
    }
}

fn stats(a: StatsArgs, run: &mut Run) -> Result<(), Failure> {
    run.manifest_path = a.out.as_deref().map(manifest_path_for);
    run.config = json!({ "inputs": a.inputs, "out": a.out });
    let mut corpora = Vec::new();
    for path in &a.inputs {
        run.input(path)?;
        corpora.push((path.clone(), load(path)?));
    }
    let s = corpus_stats(&corpora);
    print_stats(&s);
    if let Some(out) = &a.out {
        run.staged.json(out, &s).map_err(Failure::data)?;
    }
    run.summary = Some(json!({ "records": s.records_total }));
    Ok(())
}
