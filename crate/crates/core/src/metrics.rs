//! Corpus BLEU-4 and ROUGE-2 F1.
//!
//! Both metrics share the `13a` tokenizer: a handful of typographic
//! characters are first folded to ASCII (curly quotes, en/em dashes,
//! ellipsis, no-break space), then punctuation is split off words the way
//! mteval-v13a does it. Case is preserved.
//!
//! BLEU is single-reference corpus BLEU: clipped n-gram counts for orders
//! 1-4 are summed over the corpus, zero-match orders are smoothed with the
//! `exp` scheme (the k-th such order gets precision `1 / (2^k * total)`),
//! and the brevity penalty is `exp(1 - r/c)` when `c < r`. A corpus with no
//! matches at all, or with an order that has no candidate n-grams, scores 0.
//!
//! ROUGE-2 is the arithmetic mean of per-pair bigram F1; a pair with fewer
//! than two tokens on either side scores 0.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub hypothesis: String,
    pub reference: String,
}

impl EvalPair {
    pub fn new(id: impl Into<String>, hypothesis: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair { id: id.into(), hypothesis: hypothesis.into(), reference: reference.into() }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no pairs to evaluate")]
    EmptyPairs,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}, line {line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{}: duplicate id `{id}`", path.display())]
    DuplicateId { path: PathBuf, id: String },
    #[error("ids do not align: missing from references {only_hyp:?}, missing from hypotheses {only_ref:?}")]
    Mismatch { only_hyp: Vec<String>, only_ref: Vec<String> },
}

static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap());
static PERIOD_COMMA_AFTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([^0-9])([\.,])").unwrap());
static PERIOD_COMMA_BEFORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([\.,])([^0-9])").unwrap());
static DIGIT_DASH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([0-9])(-)").unwrap());

fn fold_typography(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\u{2018}' | '\u{2019}' | '\u{201a}' | '\u{2032}' => out.push('\''),
            '\u{201c}' | '\u{201d}' | '\u{201e}' | '\u{2033}' => out.push('"'),
            '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}' => out.push('-'),
            '\u{2026}' => out.push_str("..."),
            '\u{00a0}' | '\u{2009}' | '\u{202f}' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

/// `13a` tokenization, preceded by typographic folding.
pub fn tokenize_13a(text: &str) -> Vec<String> {
    let mut line = fold_typography(text).replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if line.contains('&') {
        line = line.replace("&quot;", "\"").replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">");
    }
    let line = format!(" {line} ");
    let line = PUNCT.replace_all(&line, " $1 ");
    let line = PERIOD_COMMA_AFTER.replace_all(&line, "$1 $2 ");
    let line = PERIOD_COMMA_BEFORE.replace_all(&line, " $1 $2");
    let line = DIGIT_DASH.replace_all(&line, "$1 $2 ");
    line.split_whitespace().map(str::to_string).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and candidate count for one order.
fn clipped(hyp: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, hyp.len().saturating_sub(n - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0-100.
    pub score: f64,
    pub counts: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    /// Percent precisions after smoothing.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub sys_len: usize,
    pub ref_len: usize,
}

pub fn bleu_detail(pairs: &[EvalPair]) -> Result<BleuScore, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyPairs);
    }
    let mut counts = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut sys_len, mut ref_len) = (0, 0);
    for p in pairs {
        let h = tokenize_13a(&p.hypothesis);
        let r = tokenize_13a(&p.reference);
        sys_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_ORDER {
            let (m, t) = clipped(&h, &r, n);
            counts[n - 1] += m;
            totals[n - 1] += t;
        }
    }

    let brevity_penalty = if sys_len >= ref_len {
        1.0
    } else if sys_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / sys_len as f64).exp()
    };

    let mut precisions = [0.0; MAX_ORDER];
    let mut smooth = 1.0;
    let mut degenerate = counts.iter().all(|&c| c == 0);
    for n in 0..MAX_ORDER {
        if totals[n] == 0 {
            degenerate = true;
            break;
        }
        precisions[n] = if counts[n] == 0 {
            smooth *= 2.0;
            100.0 / (smooth * totals[n] as f64)
        } else {
            100.0 * counts[n] as f64 / totals[n] as f64
        };
    }
    let score = if degenerate {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        brevity_penalty * mean_log.exp()
    };
    Ok(BleuScore { score, counts, totals, precisions, brevity_penalty, sys_len, ref_len })
}

/// Corpus BLEU-4 on a 0-100 scale.
pub fn bleu4(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    bleu_detail(pairs).map(|b| b.score)
}

/// Bigram-overlap F1 for one pair.
pub fn rouge2_pair(hypothesis: &str, reference: &str) -> f64 {
    let h = tokenize_13a(hypothesis);
    let r = tokenize_13a(reference);
    if h.len() < 2 || r.len() < 2 {
        return 0.0;
    }
    let (matched, hyp_bigrams) = clipped(&h, &r, 2);
    if matched == 0 {
        return 0.0;
    }
    let precision = matched as f64 / hyp_bigrams as f64;
    let recall = matched as f64 / (r.len() - 1) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean per-pair ROUGE-2 F1 in `[0, 1]`.
pub fn rouge2(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyPairs);
    }
    let sum: f64 = pairs.iter().map(|p| rouge2_pair(&p.hypothesis, &p.reference)).sum();
    Ok(sum / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub id: String,
    pub rouge2: f64,
}

/// Evaluation summary. `perplexity` and `nubia` are reserved for
/// model-based metrics computed elsewhere and are `null` here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu4: f64,
    pub rouge2_f1: f64,
    pub pair_count: usize,
    pub bleu_detail: BleuScore,
    pub per_pair_rouge2: Vec<PairScore>,
    pub perplexity: Option<f64>,
    pub nubia: Option<f64>,
}

pub fn evaluate_pairs(pairs: &[EvalPair]) -> Result<EvalReport, MetricsError> {
    let detail = bleu_detail(pairs)?;
    let per_pair: Vec<PairScore> = pairs
        .iter()
        .map(|p| PairScore { id: p.id.clone(), rouge2: rouge2_pair(&p.hypothesis, &p.reference) })
        .collect();
    let rouge = per_pair.iter().map(|p| p.rouge2).sum::<f64>() / pairs.len() as f64;
    Ok(EvalReport {
        bleu4: detail.score,
        rouge2_f1: rouge,
        pair_count: pairs.len(),
        bleu_detail: detail,
        per_pair_rouge2: per_pair,
        perplexity: None,
        nubia: None,
    })
}

/// Text fields tried, in order, when reading an evaluation file.
pub const TEXT_FIELDS: &[&str] = &["text", "hypothesis", "summary", "reference"];

/// Reads `(id, text)` rows from JSONL. Each object needs a string `id` and
/// one of [`TEXT_FIELDS`]; canonical corpus files therefore work as-is.
pub fn read_texts(path: &Path) -> Result<Vec<(String, String)>, MetricsError> {
    let file = fs::File::open(path).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| MetricsError::Line { path: path.to_path_buf(), line: i + 1, message };
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| bad(format!("malformed JSON: {e}")))?;
        let id = v.get("id").and_then(|x| x.as_str()).ok_or_else(|| bad("missing string `id`".into()))?;
        let text = TEXT_FIELDS
            .iter()
            .find_map(|f| v.get(*f).and_then(|x| x.as_str()))
            .ok_or_else(|| bad(format!("record `{id}` has none of the fields {TEXT_FIELDS:?}")))?;
        if !seen.insert(id.to_string()) {
            return Err(MetricsError::DuplicateId { path: path.to_path_buf(), id: id.to_string() });
        }
        rows.push((id.to_string(), text.to_string()));
    }
    Ok(rows)
}

/// Pairs hypotheses with references by id, in reference-file order.
pub fn align(hyps: Vec<(String, String)>, refs: Vec<(String, String)>) -> Result<Vec<EvalPair>, MetricsError> {
    let ref_ids: HashSet<&str> = refs.iter().map(|(id, _)| id.as_str()).collect();
    let only_hyp: Vec<String> =
        hyps.iter().filter(|(id, _)| !ref_ids.contains(id.as_str())).map(|(id, _)| id.clone()).collect();
    let mut hyp_map: HashMap<String, String> = hyps.into_iter().collect();
    let only_ref: Vec<String> =
        refs.iter().filter(|(id, _)| !hyp_map.contains_key(id)).map(|(id, _)| id.clone()).collect();
    if !only_hyp.is_empty() || !only_ref.is_empty() {
        return Err(MetricsError::Mismatch { only_hyp, only_ref });
    }
    Ok(refs
        .into_iter()
        .map(|(id, reference)| {
            let hypothesis = hyp_map.remove(&id).expect("aligned");
            EvalPair { id, hypothesis, reference }
        })
        .collect())
}

pub fn evaluate(hyp_file: &Path, ref_file: &Path) -> Result<EvalReport, MetricsError> {
    let pairs = align(read_texts(hyp_file)?, read_texts(ref_file)?)?;
    evaluate_pairs(&pairs)
}
