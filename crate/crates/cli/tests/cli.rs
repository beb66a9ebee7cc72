use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chartsum_cli::{EXIT_BACKEND, EXIT_DATA, EXIT_OK, EXIT_USAGE, corpus_stats};
use chartsum_core::ingest::{load_canonical, save_canonical};
use chartsum_core::{ChartRecord, ChartType, Corpus, Series, SplitTag};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn chartsum(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chartsum"));
    cmd.args(args).env_remove("CHARTSUM_BACKEND_URL").env_remove("CHARTSUM_BACKEND_RETRIES");
    cmd.env_remove("CHARTSUM_BACKEND_TIMEOUT_MS").env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rec(id: &str, summary: &str) -> ChartRecord {
    ChartRecord {
        id: id.into(),
        title: "Unemployment rate in Canada".into(),
        chart_type: ChartType::Line,
        x_label: "Year".into(),
        y_labels: vec!["Rate".into()],
        series: vec![Series::new("Rate", vec![("2019".into(), "5.7".into()), ("2020".into(), "9.5".into())])],
        summary: summary.into(),
    }
}

fn three_records(dir: &Path) -> PathBuf {
    let path = dir.join("small.jsonl");
    let corpus = Corpus::new(
        vec![
            rec("a", "The rate was 5.7 in 2019."),
            rec("b", "The rate was 5.7 in 2019. It rose to 9.5 in 2020."),
            rec("c", "The rate was 5.7 in 2019. It rose to 9.5 in 2020. Dr. Smith blamed the U.S. economy."),
        ],
        SplitTag::Unsplit,
    );
    save_canonical(&corpus, &path).unwrap();
    path
}

#[test]
fn linearize_road_rage_matches_golden() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lin.jsonl");
    let o = chartsum(
        &["linearize", "--in", p(&fixture("golden/records.jsonl")), "--format", "proposed", "--out", p(&out)],
        &[],
    );
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = fs::read_to_string(fixture("golden/road_rage_proposed.txt")).unwrap();
    let lines: Vec<Value> =
        fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let road = lines.iter().find(|l| l["id"] == "road-rage").unwrap();
    assert_eq!(road["format"], "proposed");
    assert_eq!(road["text"].as_str().unwrap(), golden.trim_end());

    let manifest = read_json(&dir.path().join("lin.manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["spec"]["label_marker"], "x-y labels");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn usage_errors_exit_one() {
    let o = chartsum(&["frobnicate"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(chartsum(&[], &[]).status.code(), Some(EXIT_USAGE));
    assert_eq!(
        chartsum(&["filter", "--in", "x", "--out", "y", "--audit", "z", "--threshold", "1.5"], &[]).status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        chartsum(&["filter", "--in", "x", "--out", "y", "--audit", "z", "--backend", "mock:two"], &[]).status.code(),
        Some(EXIT_USAGE)
    );
    let o = chartsum(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&o.stdout).contains("inject-noise"));
}

#[test]
fn remote_backend_down_exits_three_and_writes_only_failed_manifest() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let out = dir.path().join("clean.jsonl");
    let audit = dir.path().join("audit.jsonl");
    let o = chartsum(
        &[
            "filter",
            "--in",
            p(&input),
            "--backend",
            "remote",
            "--backend-url",
            "http://127.0.0.1:9",
            "--backend-retries",
            "2",
            "--backend-backoff-ms",
            "1",
            "--out",
            p(&out),
            "--audit",
            p(&audit),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(EXIT_BACKEND));
    assert!(String::from_utf8_lossy(&o.stderr).contains("after 3 attempt(s)"));
    assert!(!out.exists() && !audit.exists());
    let manifest = read_json(&dir.path().join("clean.manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["exit_code"], EXIT_BACKEND);
    assert!(manifest["error"].as_str().unwrap().contains("chartsum-"));
    assert_eq!(manifest["outputs"], Value::Array(vec![]));
}

#[test]
fn backend_flags_override_environment() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let out = dir.path().join("clean.jsonl");
    let run = |extra: &[&str]| {
        let mut args = vec![
            "filter",
            "--in",
            p(&input),
            "--backend",
            "remote",
            "--backend-backoff-ms",
            "1",
            "--out",
            p(&out),
            "--audit",
            "unused.jsonl",
        ];
        args.extend_from_slice(extra);
        let env = [
            ("CHARTSUM_BACKEND_URL", "http://127.0.0.1:7"),
            ("CHARTSUM_BACKEND_RETRIES", "0"),
            ("CHARTSUM_BACKEND_TIMEOUT_MS", "1500"),
        ];
        assert_eq!(chartsum(&args, &env).status.code(), Some(EXIT_BACKEND));
        read_json(&dir.path().join("clean.manifest.json"))["config"]["backend"]["service"].clone()
    };
    let from_env = run(&[]);
    assert_eq!(from_env["base_url"], "http://127.0.0.1:7");
    assert_eq!(from_env["retries"], 0);
    assert_eq!(from_env["timeout_ms"], 1500);
    let from_flags = run(&["--backend-url", "http://127.0.0.1:9", "--backend-retries", "1"]);
    assert_eq!(from_flags["base_url"], "http://127.0.0.1:9");
    assert_eq!(from_flags["retries"], 1);
    assert_eq!(from_flags["timeout_ms"], 1500);
}

#[test]
fn data_errors_name_the_record() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let mut text = fs::read_to_string(&input).unwrap();
    let first = text.lines().next().unwrap().to_string();
    text.push_str(&first);
    text.push('\n');
    let dup = dir.path().join("dup.jsonl");
    fs::write(&dup, text).unwrap();
    let out = dir.path().join("lin.jsonl");
    let o = chartsum(&["linearize", "--in", p(&dup), "--out", p(&out)], &[]);
    assert_eq!(o.status.code(), Some(EXIT_DATA));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("duplicate id, line 4: `a`"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
    assert_eq!(read_json(&dir.path().join("lin.manifest.json"))["status"], "failed");
}

#[test]
fn split_writes_three_tagged_files() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("all.jsonl");
    save_canonical(&chartsum_core::synth::corpus(40, 3), &input).unwrap();
    let prefix = format!("{}/splits/", dir.path().display());
    let o = chartsum(&["split", "--in", p(&input), "--seed", "9", "--out-prefix", &prefix], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let sizes: Vec<(SplitTag, usize)> = ["train", "validation", "test"]
        .iter()
        .map(|s| load_canonical(&dir.path().join(format!("splits/{s}.jsonl"))).unwrap())
        .map(|c| (c.split_tag, c.len()))
        .collect();
    assert_eq!(sizes, [(SplitTag::Train, 28), (SplitTag::Validation, 6), (SplitTag::Test, 6)]);
    let manifest = read_json(&dir.path().join("splits/manifest.json"));
    assert_eq!(manifest["summary"]["train"], 28);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    // An already-split file is refused.
    let o = chartsum(
        &["split", "--in", p(&dir.path().join("splits/train.jsonl")), "--out-prefix", &format!("{prefix}again.")],
        &[],
    );
    assert_eq!(o.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&o.stderr).contains("already tagged `train`"));

    let o = chartsum(&["split", "--in", p(&input), "--ratios", "0.5,0.5,0.5", "--out-prefix", &prefix], &[]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn filter_mock_and_lexical() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let out = dir.path().join("clean.jsonl");
    let audit = dir.path().join("audit.jsonl");
    let args = |backend: &'static str, policy: &'static str| {
        vec![
            "filter".to_string(),
            "--in".into(),
            p(&input).into(),
            "--backend".into(),
            backend.into(),
            "--empty-policy".into(),
            policy.into(),
            "--out".into(),
            p(&out).into(),
            "--audit".into(),
            p(&audit).into(),
        ]
    };
    let run = |a: Vec<String>| chartsum(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[]).status.code();

    assert_eq!(run(args("mock:1.0", "drop")), Some(EXIT_OK));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&input).unwrap());

    assert_eq!(run(args("mock:0.0", "drop")), Some(EXIT_OK));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
    assert_eq!(fs::read_to_string(&audit).unwrap().lines().count(), 3);

    assert_eq!(run(args("mock:0.0", "keep-best")), Some(EXIT_OK));
    let kept = load_canonical(&out).unwrap();
    assert!(kept.records.iter().all(|r| r.summary == "The rate was 5.7 in 2019."));
    let m = read_json(&dir.path().join("clean.manifest.json"));
    assert_eq!(m["summary"]["stats"]["sentences_rescued"], 3);

    assert_eq!(run(args("lexical", "drop")), Some(EXIT_OK));
    let audit_lines: Vec<Value> =
        fs::read_to_string(&audit).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let c = &audit_lines[2]["decisions"];
    assert_eq!(c[2]["sentence"], "Dr. Smith blamed the U.S. economy.");
    assert_eq!(c[2]["kept"], false);
    assert_eq!(c[0]["kept"], true);
}

#[test]
fn inject_noise_and_evaluate() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let noisy = dir.path().join("noisy.jsonl");
    let events = dir.path().join("events.jsonl");
    let o = chartsum(
        &[
            "inject-noise",
            "--in",
            p(&input),
            "--seed",
            "5",
            "--fraction",
            "0.5",
            "--out",
            p(&noisy),
            "--events",
            p(&events),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(fs::read_to_string(&events).unwrap().lines().count(), 2);

    let report = dir.path().join("report.json");
    let o = chartsum(&["evaluate", "--hyp", p(&input), "--ref", p(&input), "--out", p(&report)], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let r = read_json(&report);
    assert!((r["bleu4"].as_f64().unwrap() - 100.0).abs() <= 1e-9);
    assert_eq!((r["rouge2_f1"].as_f64(), r["pair_count"].as_u64()), (Some(1.0), Some(3)));
    assert!(dir.path().join("report.manifest.json").exists());

    let partial = dir.path().join("partial.jsonl");
    let text = fs::read_to_string(&input).unwrap();
    fs::write(&partial, text.lines().take(2).collect::<Vec<_>>().join("\n")).unwrap();
    let o = chartsum(&["evaluate", "--hyp", p(&partial), "--ref", p(&input), "--out", p(&report)], &[]);
    assert_eq!(o.status.code(), Some(EXIT_DATA));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("missing from hypotheses [\"c\"]"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn stats_counts_and_means() {
    let dir = TempDir::new().unwrap();
    let input = three_records(dir.path());
    let out = dir.path().join("stats.json");
    let o = chartsum(&["stats", "--in", p(&input), "--out", p(&out)], &[]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&o.stdout).contains("records          3"));
    let s = read_json(&out);
    assert_eq!(s["records_total"], 3);
    assert_eq!(s["mean_sentences"], 2.0);
    assert_eq!(s["sentence_count_distribution"], serde_json::json!({"1": 1, "2": 1, "3": 1}));
    assert_eq!(s["records_by_split"]["unsplit"], 3);

    let corpus = load_canonical(&input).unwrap();
    let st = corpus_stats(&[(input.clone(), corpus.clone()), (input, Corpus::new(corpus.records, SplitTag::Test))]);
    assert_eq!(st.records_total, 6);
    assert_eq!(st.records_by_split.get(&SplitTag::Test), Some(&3));
}
