//! Rule-based sentence segmentation.
//!
//! Text is first whitespace-normalized (runs of whitespace become one space,
//! ends trimmed). A sentence ends after a word whose last character, ignoring
//! closing quotes and brackets, is `.`, `!` or `?` when the next word starts
//! with an uppercase letter or a digit (opening quotes and brackets ignored).
//! A period-final word found in the abbreviation list does not end a
//! sentence, with one exception: a capital initialism such as `U.S.` does
//! when the next word is a common sentence opener (`The`, `That`, `It`, ...),
//! as in "spending in the U.S. That is twice the average."
//! Decimals such as `8.62` contain no space and are never split.
//!
//! Because boundaries always fall on the single spaces of the normalized
//! text, joining the sentences with one space gives back exactly the
//! normalized input.

use std::collections::HashSet;
use std::io;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

/// The shipped abbreviation list.
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

static DEFAULT: LazyLock<Segmenter> = LazyLock::new(|| Segmenter::from_list(DEFAULT_ABBREVIATIONS));

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}'];

const SENTENCE_OPENERS: &[&str] = &[
    "A",
    "According",
    "After",
    "An",
    "As",
    "At",
    "But",
    "During",
    "For",
    "He",
    "However",
    "In",
    "It",
    "Its",
    "Meanwhile",
    "Overall",
    "She",
    "Since",
    "That",
    "The",
    "There",
    "These",
    "They",
    "This",
    "Those",
    "We",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedSummary {
    pub sentences: Vec<String>,
    pub joiner: String,
}

impl SegmentedSummary {
    pub fn new(sentences: Vec<String>) -> Self {
        SegmentedSummary { sentences, joiner: " ".to_string() }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Segmenter {
    pub fn new<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Segmenter { abbreviations: abbreviations.into_iter().map(Into::into).collect() }
    }

    /// Parses the abbreviation list format: one entry per line, blank lines
    /// and `#` comments ignored.
    pub fn from_list(list: &str) -> Self {
        Self::new(list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(Self::from_list(&std::fs::read_to_string(path)?))
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(word.trim_start_matches(OPENERS))
    }

    pub fn segment(&self, text: &str) -> SegmentedSummary {
        let words: Vec<&str> = text.split_whitespace().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        for i in 0..words.len() {
            let last = i + 1 == words.len();
            if last || self.ends_sentence(words[i], words[i + 1]) {
                sentences.push(words[start..=i].join(" "));
                start = i + 1;
            }
        }
        SegmentedSummary::new(sentences)
    }

    fn ends_sentence(&self, word: &str, next: &str) -> bool {
        let core = word.trim_end_matches(CLOSERS);
        let Some(p) = core.chars().last() else { return false };
        if !matches!(p, '.' | '!' | '?') {
            return false;
        }
        let next = next.trim_start_matches(OPENERS);
        let starts_ok = next.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit());
        if !starts_ok {
            return false;
        }
        if p == '.' && self.is_abbreviation(core) {
            return is_initialism(core.trim_start_matches(OPENERS)) && SENTENCE_OPENERS.contains(&next);
        }
        true
    }
}

/// `U.S.`, `P.E.I.`: two or more single capital letters, each followed by a period.
fn is_initialism(word: &str) -> bool {
    let b = word.as_bytes();
    b.len() >= 4 && b.len().is_multiple_of(2) && b.chunks(2).all(|c| c[0].is_ascii_uppercase() && c[1] == b'.')
}

impl Default for Segmenter {
    fn default() -> Self {
        DEFAULT.clone()
    }
}

/// Segments with the shipped abbreviation list.
pub fn segment(text: &str) -> SegmentedSummary {
    DEFAULT.segment(text)
}

pub fn reassemble(seg: &SegmentedSummary) -> String {
    seg.sentences.join(&seg.joiner)
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROAD_RAGE: &str = "This statistic shows the road rage behavior of drivers in the United States as of 2015. Four percent of the drivers said they have been on the receiving end of a rude gesture. The survey was conducted online and all the participants had a valid U.S. driving license.";

    #[test]
    fn two_plain_sentences() {
        let s = segment("This statistic shows road rage behavior. Four percent said so.");
        assert_eq!(s.sentences, vec!["This statistic shows road rage behavior.", "Four percent said so."]);
    }

    #[test]
    fn abbreviation_does_not_split() {
        let s = segment("All the participants had a valid U.S. driving license.");
        assert_eq!(s.len(), 1);
        let s = segment("See Fig. 2 for details. Dr. Smith agreed.");
        assert_eq!(s.sentences, vec!["See Fig. 2 for details.", "Dr. Smith agreed."]);
    }

    #[test]
    fn initialism_before_sentence_opener() {
        let s = segment("It was 12 in the U.S. That is high. The U.S. Army grew. Dr. The");
        assert_eq!(s.sentences, vec!["It was 12 in the U.S.", "That is high.", "The U.S. Army grew.", "Dr. The"]);
        assert!(is_initialism("P.E.I.") && !is_initialism("Dr.") && !is_initialism("e.g."));
    }

    #[test]
    fn decimal_does_not_split() {
        assert_eq!(segment("Sales were 8.62 million liters in 2019.").len(), 1);
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(segment("It rose approx. by half. then fell").len(), 1);
    }

    #[test]
    fn digits_quotes_and_other_terminators() {
        let s = segment("Is it up? 2019 was a record year! \"Yes,\" he said.");
        assert_eq!(s.sentences, vec!["Is it up?", "2019 was a record year!", "\"Yes,\" he said."]);
        let s = segment("He said \"stop.\" Then (Later) it ended.");
        assert_eq!(s.sentences, vec!["He said \"stop.\"", "Then (Later) it ended."]);
    }

    #[test]
    fn empty_and_whitespace() {
        assert!(segment("").is_empty());
        assert!(segment(" \n\t ").is_empty());
        assert_eq!(reassemble(&segment("   ")), "");
    }

    #[test]
    fn road_rage_summary_round_trip() {
        let s = segment(ROAD_RAGE);
        assert_eq!(s.len(), 3);
        assert_eq!(reassemble(&s), ROAD_RAGE);
        let messy = ROAD_RAGE.replace(". ", ".\n   ");
        assert_eq!(reassemble(&segment(&messy)), ROAD_RAGE);
    }

    #[test]
    fn custom_list() {
        let seg = Segmenter::from_list("# comment\n\nabc.\n");
        assert!(seg.is_abbreviation("abc."));
        assert!(seg.is_abbreviation("(abc."));
        assert!(!seg.is_abbreviation("U.S."));
        assert_eq!(seg.segment("The U.S. Army left.").len(), 2);
    }
}
