use std::path::PathBuf;

use chartsum_core::filter::{DEFAULT_THRESHOLD, EmptyPolicy, OnError};
use chartsum_core::service::{DEFAULT_RETRIES, DEFAULT_TIMEOUT_MS, DEFAULT_URL, ENV_RETRIES, ENV_TIMEOUT_MS, ENV_URL};
use chartsum_core::{Format, LinearizationSpec};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "chartsum", version, about = "Chart-to-text corpus preprocessing and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a canonical JSONL corpus, or tables plus metadata, and write canonical JSONL.
    Ingest(IngestArgs),
    /// Shuffle an unsplit corpus and cut it into train, validation and test files.
    Split(SplitArgs),
    /// Turn every chart into a model input string.
    Linearize(LinearizeArgs),
    /// Drop summary sentences the entailment backend does not support.
    Filter(FilterArgs),
    /// Insert one generated sentence into a seeded subset of summaries.
    InjectNoise(NoiseArgs),
    /// Score hypotheses against references with BLEU-4 and ROUGE-2.
    Evaluate(EvaluateArgs),
    /// Print record counts and summary length statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Canonical JSONL file, or with --meta a CSV/TSV table or a directory of them.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON object mapping table ids to title, summary and optional labels.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Train, validation and test fractions summing to 1.
    #[arg(long, default_value = "0.70,0.15,0.15")]
    pub ratios: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `out/` writes out/train.jsonl; `out/c2t` writes out/c2t.train.jsonl.
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, default_value = "proposed", value_parser = parse_format)]
    pub format: Format,
    #[arg(long)]
    pub label_marker: Option<String>,
    #[arg(long)]
    pub value_marker: Option<String>,
    #[arg(long)]
    pub pair_separator: Option<String>,
    #[arg(long)]
    pub cell_separator: Option<String>,
    #[arg(long)]
    pub multi_label_joiner: Option<String>,
}

impl SpecArgs {
    pub fn resolve(&self) -> LinearizationSpec {
        let mut spec = LinearizationSpec::new(self.format);
        let overrides = [
            (&self.label_marker, &mut spec.label_marker),
            (&self.value_marker, &mut spec.value_marker),
            (&self.pair_separator, &mut spec.pair_separator),
            (&self.cell_separator, &mut spec.cell_separator),
            (&self.multi_label_joiner, &mut spec.multi_label_joiner),
        ];
        for (value, field) in overrides {
            if let Some(v) = value {
                *field = v.clone();
            }
        }
        spec
    }
}

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Connection settings for the entailment / generation service. Flags win
/// over the environment.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ServiceArgs {
    #[arg(long = "backend-url", env = ENV_URL, default_value = DEFAULT_URL)]
    pub base_url: String,
    #[arg(long = "backend-timeout-ms", env = ENV_TIMEOUT_MS, default_value_t = DEFAULT_TIMEOUT_MS)]
    pub timeout_ms: u64,
    #[arg(long = "backend-retries", env = ENV_RETRIES, default_value_t = DEFAULT_RETRIES)]
    pub retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    #[arg(long = "backend-backoff-ms", default_value_t = 200)]
    pub backoff_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Lexical,
    Mock { value: f64 },
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "remote" => Ok(BackendKind::Remote),
        "lexical" => Ok(BackendKind::Lexical),
        _ => match s.strip_prefix("mock:").map(str::parse::<f64>) {
            Some(Ok(v)) if (0.0..=1.0).contains(&v) => Ok(BackendKind::Mock { value: v }),
            Some(_) => Err("mock score must be a number in [0, 1], e.g. mock:0.5".into()),
            None => Err("expected remote, lexical or mock:<score>".into()),
        },
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    let names: Vec<&str> = Format::ALL.iter().map(|f| f.as_str()).collect();
    Format::parse(s).ok_or_else(|| format!("expected one of {}", names.join(", ")))
}

fn parse_empty_policy(s: &str) -> Result<EmptyPolicy, String> {
    EmptyPolicy::parse(s).ok_or_else(|| "expected drop or keep-best".into())
}

fn parse_on_error(s: &str) -> Result<OnError, String> {
    match s {
        "abort" => Ok(OnError::Abort),
        "skip" => Ok(OnError::Skip),
        _ => Err("expected abort or skip".into()),
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if (0.0..=1.0).contains(&t) => Ok(t),
        _ => Err("threshold must be a number in [0, 1]".into()),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f <= 1.0 => Ok(f),
        _ => Err("fraction must be in (0, 1]".into()),
    }
}

fn parse_workers(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err("must be a positive integer".into()),
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Sentences scoring strictly above this are kept.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = parse_threshold)]
    pub threshold: f64,
    /// remote, lexical, or mock:<score> for a constant score.
    #[arg(long, default_value = "remote", value_parser = parse_backend)]
    pub backend: BackendKind,
    /// What to do when no sentence passes: drop the record or keep its best sentence.
    #[arg(long, default_value = "drop", value_parser = parse_empty_policy)]
    pub empty_policy: EmptyPolicy,
    #[arg(long, default_value = "abort", value_parser = parse_on_error)]
    pub on_error: OnError,
    #[arg(long, default_value_t = 4, value_parser = parse_workers)]
    pub parallelism: usize,
    /// Pairs per /v1/score_batch request; 1 sends every pair to /v1/score.
    #[arg(long, default_value_t = 16, value_parser = parse_workers)]
    pub batch_size: usize,
    #[command(flatten)]
    pub service: ServiceArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub audit: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Stub,
    Remote,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = GeneratorKind::Stub)]
    pub generator: GeneratorKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_fraction)]
    pub fraction: f64,
    #[arg(long, default_value_t = 4, value_parser = parse_workers)]
    pub parallelism: usize,
    #[command(flatten)]
    pub service: ServiceArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL with `id` and one of text / hypothesis / summary / reference.
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// One or more canonical JSONL files; the split comes from each file name.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Also write the statistics as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
