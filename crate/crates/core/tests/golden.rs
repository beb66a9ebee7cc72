//! Linearizations of the transcribed reference charts, byte for byte.
//!
//! Fixture strings were transcribed from typeset tables: `$|$` became `|`,
//! `\%` became `%`, and every run of whitespace was collapsed to one space,
//! except the two-space gap after the title in the kantharaj format.

mod support;

use std::fs;

use chartsum_core::ingest::{load_canonical, load_tabular};
use chartsum_core::{ChartRecord, Format, LinearizationSpec, linearize};
use support::fixture;

fn golden(name: &str) -> String {
    fs::read_to_string(fixture(&format!("golden/{name}.txt"))).unwrap().trim_end_matches('\n').to_string()
}

fn record(id: &str) -> ChartRecord {
    let corpus = load_canonical(&fixture("golden/records.jsonl")).unwrap();
    corpus.records.into_iter().find(|r| r.id == id).unwrap()
}

fn short_markers() -> LinearizationSpec {
    LinearizationSpec {
        label_marker: "labels".into(),
        value_marker: "values".into(),
        pair_separator: " , ".into(),
        ..LinearizationSpec::proposed()
    }
}

#[test]
fn road_rage_proposed() {
    let out = linearize(&record("road-rage"), &LinearizationSpec::proposed()).unwrap();
    assert_eq!(out.text, golden("road_rage_proposed"));
    assert_eq!(out.source_id, "road-rage");
}

#[test]
fn social_platforms_obeid() {
    let out = linearize(&record("social-platforms"), &LinearizationSpec::new(Format::Obeid)).unwrap();
    assert_eq!(out.text, golden("social_platforms_obeid"));
    assert!(out.text.starts_with("Platform | Facebook | 0 | bar chart 18-24 | 36 | 1 | bar chart"));
}

#[test]
fn foreign_born_kantharaj() {
    let out = linearize(&record("foreign-born"), &LinearizationSpec::new(Format::Kantharaj)).unwrap();
    assert_eq!(out.text, golden("foreign_born_kantharaj"));
}

#[test]
fn beer_proposed_short_markers() {
    let out = linearize(&record("beer-pei"), &short_markers()).unwrap();
    assert_eq!(out.text, golden("beer_pei_proposed_short_markers"));
}

#[test]
fn tabular_ingest_reproduces_goldens() {
    let corpus = load_tabular(&fixture("tables"), &fixture("tables/meta.json")).unwrap();
    let ids: Vec<&str> = corpus.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["beer-pei", "road-rage"]);

    let beer = &corpus.records[0];
    assert_eq!(beer.x_label, "Year");
    assert_eq!(beer.y_labels, ["Packaged", "Draught"]);
    assert_eq!(beer.series[0].points[0], ("2019".to_string(), "8.62".to_string()));
    assert_eq!(beer.series[1].points[0], ("2019".to_string(), "1.13".to_string()));
    assert_eq!(linearize(beer, &short_markers()).unwrap().text, golden("beer_pei_proposed_short_markers"));

    let rage = &corpus.records[1];
    assert_eq!((rage.series.len(), rage.series[0].points.len()), (1, 5));
    assert_eq!(linearize(rage, &LinearizationSpec::proposed()).unwrap().text, golden("road_rage_proposed"));
}

#[test]
fn tabular_missing_metadata_names_id() {
    let dir = tempdir();
    fs::write(dir.join("orphan.csv"), "Year,Value\n2019,1\n").unwrap();
    fs::write(dir.join("meta.json"), "{}").unwrap();
    let err = load_tabular(&dir.join("orphan.csv"), &dir.join("meta.json")).unwrap_err();
    assert_eq!(err.to_string(), "no metadata for id `orphan`");
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("chartsum-golden-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}
