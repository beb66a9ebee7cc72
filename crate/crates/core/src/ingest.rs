//! Loading, saving and splitting corpora.
//!
//! The canonical on-disk form is JSON Lines with one [`ChartRecord`] per
//! line. [`load_tabular`] adapts the common "data table + metadata sidecar"
//! layout into the same model.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{ChartRecord, ChartType, Corpus, Series, SplitTag, Violation};
use crate::rng::SeededRng;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed JSON: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("duplicate id, line {line}: `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: record `{id}` is invalid: {}", violations.iter().map(|v| format!("{}: {v}", v.field())).collect::<Vec<_>>().join("; "))]
    InvalidRecord { id: String, line: usize, violations: Vec<Violation> },
    #[error("{}: {message}", path.display())]
    Table { path: PathBuf, message: String },
    #[error("{}: row {row} has {found} columns, header has {expected}", path.display())]
    ColumnCount { path: PathBuf, row: usize, expected: usize, found: usize },
    #[error("no metadata for id `{id}`")]
    MissingMetadata { id: String },
    #[error("metadata for `{id}`: {message}")]
    BadMetadata { id: String, message: String },
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("corpus is already tagged `{0}`; only unsplit corpora are split")]
    AlreadySplit(SplitTag),
    #[error("invalid split ratios: {0}")]
    BadRatios(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

/// Reads a canonical JSONL corpus. Blank lines are skipped; line numbers in
/// errors are 1-based physical lines.
pub fn load_canonical(path: &Path) -> Result<Corpus, IngestError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut corpus = read_canonical(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io { path: path.to_path_buf(), source },
        other => other,
    })?;
    corpus.split_tag = SplitTag::from_path(path);
    Ok(corpus)
}

pub fn read_canonical<R: BufRead>(reader: R) -> Result<Corpus, IngestError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| IngestError::Io { path: PathBuf::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChartRecord =
            serde_json::from_str(&line).map_err(|source| IngestError::Json { line: line_no, source })?;
        if !seen.insert(record.id.clone()) {
            return Err(IngestError::DuplicateId { id: record.id, line: line_no });
        }
        let violations = record.validate();
        if !violations.is_empty() {
            return Err(IngestError::InvalidRecord { id: record.id, line: line_no, violations });
        }
        records.push(record);
    }
    Ok(Corpus::new(records, SplitTag::Unsplit))
}

pub fn write_canonical<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    for r in &corpus.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_canonical(corpus: &Corpus, path: &Path) -> Result<(), IngestError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_canonical(corpus, io::BufWriter::new(file)).map_err(io_err(path))
}

/// Per-record sidecar entry. Axis labels default to the table header.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableMeta {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub chart_type: Option<String>,
    #[serde(default)]
    pub x_label: Option<String>,
    #[serde(default)]
    pub y_labels: Option<Vec<String>>,
    #[serde(default)]
    pub summary: String,
}

/// Builds a corpus from delimited tables plus a JSON metadata sidecar.
///
/// `data_path` is either one table file or a directory of `*.csv`, `*.tsv`
/// and `*.txt` tables (processed in file-name order). A table's id is its
/// file stem. The sidecar is a JSON object keyed by id. Each table has a
/// header row: its first column becomes the x label and the remaining
/// columns become series (and default y labels). The delimiter is a tab if
/// the first line contains one, otherwise a comma.
pub fn load_tabular(data_path: &Path, meta_path: &Path) -> Result<Corpus, IngestError> {
    let meta_text = fs::read_to_string(meta_path).map_err(io_err(meta_path))?;
    let meta: BTreeMap<String, TableMeta> = serde_json::from_str(&meta_text).map_err(|e| IngestError::Table {
        path: meta_path.to_path_buf(),
        message: format!("malformed metadata: {e}"),
    })?;

    let tables = if data_path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(data_path)
            .map_err(io_err(data_path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| matches!(e.to_str(), Some("csv" | "tsv" | "txt"))))
            .collect();
        files.sort();
        files
    } else {
        vec![data_path.to_path_buf()]
    };

    let mut records = Vec::with_capacity(tables.len());
    for path in &tables {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let m = meta.get(&id).ok_or_else(|| IngestError::MissingMetadata { id: id.clone() })?;
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        records.push(parse_table(path, &id, &text, m)?);
    }
    Ok(Corpus::new(records, SplitTag::Unsplit))
}

/// Parses one delimited table into a record. `path` is only used in errors.
pub fn parse_table(path: &Path, id: &str, text: &str, meta: &TableMeta) -> Result<ChartRecord, IngestError> {
    let table_err = |message: &str| IngestError::Table { path: path.to_path_buf(), message: message.to_string() };
    let first = text.lines().next().ok_or_else(|| table_err("empty table"))?;
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> =
        reader.headers().map_err(|e| table_err(&e.to_string()))?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(table_err("header needs an x column and at least one value column"));
    }

    let mut series: Vec<Series> = header[1..].iter().map(|name| Series::new(name.clone(), Vec::new())).collect();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| table_err(&e.to_string()))?;
        if row.len() != header.len() {
            return Err(IngestError::ColumnCount {
                path: path.to_path_buf(),
                row: i + 1,
                expected: header.len(),
                found: row.len(),
            });
        }
        for (s, y) in series.iter_mut().zip(row.iter().skip(1)) {
            s.points.push((row[0].to_string(), y.to_string()));
        }
    }
    if series[0].points.is_empty() {
        return Err(table_err("no data rows"));
    }

    let chart_type = match &meta.chart_type {
        None => ChartType::Unknown,
        Some(s) => ChartType::parse(s).ok_or_else(|| IngestError::BadMetadata {
            id: id.to_string(),
            message: format!("unknown chart_type `{s}`"),
        })?,
    };
    let y_labels = match &meta.y_labels {
        Some(l) if l.len() != series.len() => {
            return Err(IngestError::BadMetadata {
                id: id.to_string(),
                message: format!("{} y_labels for {} value columns", l.len(), series.len()),
            });
        }
        Some(l) => l.clone(),
        None => header[1..].to_vec(),
    };
    Ok(ChartRecord {
        id: id.to_string(),
        title: meta.title.clone(),
        chart_type,
        x_label: meta.x_label.clone().unwrap_or_else(|| header[0].clone()),
        y_labels,
        series,
        summary: meta.summary.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, IngestError> {
        for (name, v) in [("train", train), ("validation", validation), ("test", test)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(IngestError::BadRatios(format!("{name} ratio {v} is not in (0, 1)")));
            }
        }
        let sum = train + validation + test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(IngestError::BadRatios(format!("ratios sum to {sum}, not 1")));
        }
        Ok(SplitRatios { train, validation, test })
    }

    /// Parses `0.70,0.15,0.15`.
    pub fn parse(s: &str) -> Result<Self, IngestError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IngestError::BadRatios(format!("`{s}`: {e}")))?;
        match parts[..] {
            [a, b, c] => Self::new(a, b, c),
            _ => Err(IngestError::BadRatios(format!("`{s}`: expected three comma-separated values"))),
        }
    }

    /// Partition sizes for `n` records: floor for train and validation, the
    /// remainder for test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
        let floor = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let validation = floor(self.validation).min(n - train);
        (train, validation, n - train - validation)
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.70, validation: 0.15, test: 0.15 }
    }
}

/// Shuffles with [`SeededRng`] and cuts into train / validation / test.
/// A corpus that already carries a split tag is refused so that upstream
/// splits are never reshuffled.
pub fn split_corpus(corpus: &Corpus, ratios: &SplitRatios, seed: u64) -> Result<(Corpus, Corpus, Corpus), IngestError> {
    if corpus.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    if corpus.split_tag != SplitTag::Unsplit {
        return Err(IngestError::AlreadySplit(corpus.split_tag));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let (n_train, n_val, _) = ratios.sizes(corpus.len());
    let take = |idx: &[usize], tag| Corpus::new(idx.iter().map(|&i| corpus.records[i].clone()).collect(), tag);
    Ok((
        take(&order[..n_train], SplitTag::Train),
        take(&order[n_train..n_train + n_val], SplitTag::Validation),
        take(&order[n_train + n_val..], SplitTag::Test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str) -> ChartRecord {
        ChartRecord {
            id: id.into(),
            title: format!("Chart {id}"),
            chart_type: ChartType::Line,
            x_label: "Year".into(),
            y_labels: vec!["Value".into()],
            series: vec![Series::new("Value", vec![("2019".into(), "1".into())])],
            summary: "It rose.".into(),
        }
    }

    fn jsonl(ids: &[&str]) -> String {
        ids.iter().map(|i| serde_json::to_string(&rec(i)).unwrap() + "\n").collect()
    }

    #[test]
    fn loads_in_file_order() {
        let c = read_canonical(jsonl(&["c", "a", "b"]).as_bytes()).unwrap();
        assert_eq!(c.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["c", "a", "b"]);
    }

    #[test]
    fn duplicate_id_names_line() {
        let err = read_canonical(jsonl(&["a", "a"]).as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateId { line: 2, .. }));
        assert!(err.to_string().starts_with("duplicate id, line 2"));
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(read_canonical("".as_bytes()).unwrap().is_empty());
        assert!(read_canonical("\n  \n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn malformed_line_names_line() {
        let text = jsonl(&["a"]) + "{not json\n";
        assert!(matches!(read_canonical(text.as_bytes()), Err(IngestError::Json { line: 2, .. })));
    }

    #[test]
    fn invalid_record_names_rule() {
        let mut r = rec("bad");
        r.y_labels.clear();
        let text = serde_json::to_string(&r).unwrap();
        let err = read_canonical(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("`bad`"));
        assert!(err.to_string().contains("y_labels/series count mismatch"));
    }

    #[test]
    fn write_then_read_is_identity() {
        let c = Corpus::new(vec![rec("x"), rec("y")], SplitTag::Unsplit);
        let mut buf = Vec::new();
        write_canonical(&c, &mut buf).unwrap();
        assert_eq!(read_canonical(buf.as_slice()).unwrap(), c);
    }

    fn meta(title: &str) -> TableMeta {
        TableMeta { title: title.into(), chart_type: None, x_label: None, y_labels: None, summary: String::new() }
    }

    #[test]
    fn table_two_series() {
        let r =
            parse_table(Path::new("t.csv"), "beer", "Year,Packaged,Draught\n2019,8.62,1.13\n", &meta("Beer")).unwrap();
        assert_eq!(r.x_label, "Year");
        assert_eq!(r.y_labels, ["Packaged", "Draught"]);
        assert_eq!(r.series[0].points, [("2019".to_string(), "8.62".to_string())]);
        assert_eq!(r.series[1].points, [("2019".to_string(), "1.13".to_string())]);
        assert_eq!(r.series[1].name, "Draught");
    }

    #[test]
    fn table_tab_delimited_with_commas_in_cells() {
        let text = "situation\tshare of respondents\nYelled, or swore\t26%\n";
        let r = parse_table(Path::new("t.tsv"), "t", text, &meta("T")).unwrap();
        assert_eq!(r.series[0].points[0], ("Yelled, or swore".to_string(), "26%".to_string()));
    }

    #[test]
    fn table_header_only_is_an_error() {
        let err = parse_table(Path::new("t.csv"), "t", "Year,Value\n", &meta("T")).unwrap_err();
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn table_wrong_column_count() {
        let err = parse_table(Path::new("t.csv"), "t", "a,b\n1,2\n3\n", &meta("T")).unwrap_err();
        assert!(matches!(err, IngestError::ColumnCount { row: 2, expected: 2, found: 1, .. }));
    }

    #[test]
    fn table_meta_overrides() {
        let m = TableMeta {
            title: "T".into(),
            chart_type: Some("bar".into()),
            x_label: Some("Season".into()),
            y_labels: Some(vec!["Goals".into()]),
            summary: "S.".into(),
        };
        let r = parse_table(Path::new("t.csv"), "t", "a,b\n1,2\n", &m).unwrap();
        assert_eq!((r.chart_type, r.x_label.as_str(), r.y_labels[0].as_str()), (ChartType::Bar, "Season", "Goals"));
        let bad = TableMeta { y_labels: Some(vec![]), ..m };
        assert!(matches!(
            parse_table(Path::new("t.csv"), "t", "a,b\n1,2\n", &bad),
            Err(IngestError::BadMetadata { .. })
        ));
    }

    #[test]
    fn split_sizes_floor_then_remainder() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(10_593), (7_415, 1_588, 1_590));
        assert_eq!(r.sizes(10), (7, 1, 2));
        assert_eq!(r.sizes(1), (0, 0, 1));
    }

    #[test]
    fn ratios_validation() {
        assert!(SplitRatios::parse("0.70,0.15,0.15").is_ok());
        assert!(SplitRatios::parse("0.7,0.2,0.2").is_err());
        assert!(SplitRatios::parse("1,0,0").is_err());
        assert!(SplitRatios::parse("0.5,0.5").is_err());
    }

    #[test]
    fn split_is_deterministic_partition() {
        let c = Corpus::new((0..37).map(|i| rec(&i.to_string())).collect(), SplitTag::Unsplit);
        let a = split_corpus(&c, &SplitRatios::default(), 9).unwrap();
        let b = split_corpus(&c, &SplitRatios::default(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.0.len(), a.1.len(), a.2.len()), (25, 5, 7));
        let mut ids: Vec<String> =
            [&a.0, &a.1, &a.2].iter().flat_map(|c| c.records.iter().map(|r| r.id.clone())).collect();
        ids.sort();
        let mut expected: Vec<String> = (0..37).map(|i| i.to_string()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        assert_eq!(a.0.split_tag, SplitTag::Train);
    }

    #[test]
    fn split_empty_is_an_error() {
        assert!(matches!(split_corpus(&Corpus::default(), &SplitRatios::default(), 1), Err(IngestError::EmptyCorpus)));
    }

    #[test]
    fn tagged_corpus_is_not_resplit() {
        let c = Corpus::new(vec![rec("a")], SplitTag::Validation);
        let err = split_corpus(&c, &SplitRatios::default(), 1).unwrap_err();
        assert_eq!(err.to_string(), "corpus is already tagged `validation`; only unsplit corpora are split");
    }
}
