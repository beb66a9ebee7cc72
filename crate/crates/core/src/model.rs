//! Canonical chart, series and corpus types shared by every pipeline stage.
//!
//! Cell values are kept as the strings they arrived as. A value such as
//! `53%` or `8.62` is emitted verbatim by the linearizers, so nothing here
//! parses numbers.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartType {
    Bar,
    Line,
    Pie,
    Table,
    #[default]
    Unknown,
}

impl ChartType {
    /// Phrase used inside the tuple-style linearization, e.g. `bar chart`.
    pub fn phrase(self) -> &'static str {
        match self {
            ChartType::Bar => "bar chart",
            ChartType::Line => "line chart",
            ChartType::Pie => "pie chart",
            ChartType::Table => "table",
            ChartType::Unknown => "chart",
        }
    }

    pub fn parse(s: &str) -> Option<ChartType> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_suffix(" chart").unwrap_or(&s);
        Some(match s {
            "bar" => ChartType::Bar,
            "line" => ChartType::Line,
            "pie" => ChartType::Pie,
            "table" => ChartType::Table,
            "unknown" | "" => ChartType::Unknown,
            _ => return None,
        })
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChartType::Bar => "bar",
            ChartType::Line => "line",
            ChartType::Pie => "pie",
            ChartType::Table => "table",
            ChartType::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// One (x, y) cell pair. Serialized as a two-element JSON array.
pub type Point = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<Point>) -> Self {
        Series { name: name.into(), points }
    }
}

/// A single chart with its reference summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartRecord {
    pub id: String,
    pub title: String,
    pub chart_type: ChartType,
    pub x_label: String,
    pub y_labels: Vec<String>,
    pub series: Vec<Series>,
    pub summary: String,
}

impl ChartRecord {
    /// Number of x positions (rows). Taken from the first series.
    pub fn row_count(&self) -> usize {
        self.series.first().map_or(0, |s| s.points.len())
    }

    pub fn point_count(&self) -> usize {
        self.series.iter().map(|s| s.points.len()).sum()
    }

    /// Checks every record-level invariant and reports each broken rule.
    ///
    /// Never fails; an empty list means the record is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(Violation::EmptyId);
        }
        if self.series.is_empty() {
            out.push(Violation::NoSeries);
        }
        if self.y_labels.len() != self.series.len() {
            out.push(Violation::LabelCountMismatch { labels: self.y_labels.len(), series: self.series.len() });
        }
        for (index, s) in self.series.iter().enumerate() {
            if s.points.is_empty() {
                out.push(Violation::EmptySeries { index });
            }
        }
        if let Some(first) = self.series.first() {
            for (index, s) in self.series.iter().enumerate().skip(1) {
                if s.points.len() != first.points.len() {
                    out.push(Violation::SeriesLengthMismatch {
                        index,
                        expected: first.points.len(),
                        found: s.points.len(),
                    });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// A broken [`ChartRecord`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    NoSeries,
    EmptySeries { index: usize },
    SeriesLengthMismatch { index: usize, expected: usize, found: usize },
    LabelCountMismatch { labels: usize, series: usize },
}

impl Violation {
    pub fn field(&self) -> &'static str {
        match self {
            Violation::EmptyId => "id",
            Violation::NoSeries | Violation::EmptySeries { .. } => "series",
            Violation::SeriesLengthMismatch { .. } => "series",
            Violation::LabelCountMismatch { .. } => "y_labels",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "empty id"),
            Violation::NoSeries => write!(f, "no series"),
            Violation::EmptySeries { index } => write!(f, "series {index} has no points"),
            Violation::SeriesLengthMismatch { index, expected, found } => {
                write!(f, "series length mismatch (series 0 has {expected} points, series {index} has {found})")
            }
            Violation::LabelCountMismatch { labels, series } => {
                write!(f, "y_labels/series count mismatch ({labels} labels, {series} series)")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
    #[default]
    Unsplit,
}

impl SplitTag {
    pub const ALL: [SplitTag; 4] = [SplitTag::Train, SplitTag::Validation, SplitTag::Test, SplitTag::Unsplit];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
            SplitTag::Unsplit => "unsplit",
        }
    }

    /// Infers the tag from a corpus file name: a stem ending in `train`,
    /// `validation`/`val`/`valid`/`dev`, or `test` (after the last `.`, `_`
    /// or `-`) is tagged accordingly; anything else is unsplit.
    pub fn from_path(path: &Path) -> SplitTag {
        let stem = path.file_stem().map(|s| s.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
        let last = stem.rsplit(['.', '_', '-']).next().unwrap_or("");
        match last {
            "train" => SplitTag::Train,
            "validation" | "valid" | "val" | "dev" => SplitTag::Validation,
            "test" => SplitTag::Test,
            _ => SplitTag::Unsplit,
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub records: Vec<ChartRecord>,
    pub split_tag: SplitTag,
}

impl Corpus {
    pub fn new(records: Vec<ChartRecord>, split_tag: SplitTag) -> Self {
        Corpus { records, split_tag }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First id that occurs more than once, if any.
    pub fn duplicate_id(&self) -> Option<&str> {
        let mut seen = HashSet::new();
        self.records.iter().map(|r| r.id.as_str()).find(|id| !seen.insert(*id))
    }
}

/// Which input template to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Obeid,
    ObeidTitle,
    Kantharaj,
    KantharajLabels,
    Proposed,
}

impl Format {
    pub const ALL: [Format; 5] =
        [Format::Obeid, Format::ObeidTitle, Format::Kantharaj, Format::KantharajLabels, Format::Proposed];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Obeid => "obeid",
            Format::ObeidTitle => "obeid-title",
            Format::Kantharaj => "kantharaj",
            Format::KantharajLabels => "kantharaj-labels",
            Format::Proposed => "proposed",
        }
    }

    pub fn parse(s: &str) -> Option<Format> {
        Format::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Template plus the marker and separator strings it uses.
///
/// Markers and separators only affect [`Format::Proposed`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationSpec {
    pub format: Format,
    pub label_marker: String,
    pub value_marker: String,
    pub pair_separator: String,
    pub cell_separator: String,
    pub multi_label_joiner: String,
}

impl LinearizationSpec {
    pub fn new(format: Format) -> Self {
        LinearizationSpec {
            format,
            label_marker: "x-y labels".to_string(),
            value_marker: "x-y values".to_string(),
            pair_separator: ", ".to_string(),
            cell_separator: " ".to_string(),
            multi_label_joiner: " - ".to_string(),
        }
    }

    pub fn proposed() -> Self {
        Self::new(Format::Proposed)
    }
}

impl Default for LinearizationSpec {
    fn default() -> Self {
        Self::proposed()
    }
}
