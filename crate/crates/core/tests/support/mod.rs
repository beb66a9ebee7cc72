#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use chartsum_core::rng::SeededRng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

const VOCAB: &[&str] = &[
    "sales", "rose", "fell", "in", "the", "year", "million", "percent", "share", "of", "users", "was", "to", "beer",
    "liters", "chart", "shows", "a", "by", "highest",
];

/// Random whitespace-joined sentence over a small punctuation-free
/// vocabulary, so tokenization is a plain whitespace split.
pub fn random_text(rng: &mut SeededRng, max_len: usize) -> String {
    let len = rng.index(max_len + 1);
    (0..len).map(|_| *rng.pick(VOCAB)).collect::<Vec<_>>().join(" ")
}
