//! Seeded synthetic charts for property tests and pipeline dry runs.
//!
//! Records look like statistics-portal charts: a title, an axis label, one to
//! three series of years or categories, and a summary whose sentences either
//! quote cells of the table (grounded) or talk about something the chart does
//! not contain (ungrounded). Every sentence ends with `.` and starts with an
//! uppercase letter or a digit, so it survives segmentation intact.

use crate::model::{ChartRecord, ChartType, Corpus, Series, SplitTag};
use crate::rng::SeededRng;

const TOPICS: &[&str] = &[
    "Sales volume of beer",
    "Number of registered voters",
    "Share of online shoppers",
    "Revenue of the gaming industry",
    "Unemployment rate",
    "Average ticket price",
    "Number of hospital beds",
    "Market share of smartphone vendors",
];
const PLACES: &[&str] =
    &["in the U.S.", "in Canada", "in Germany", "worldwide", "in the U.K.", "in Prince Edward Island"];
const CATEGORIES: &[&str] = &[
    "Facebook",
    "Instagram",
    "YouTube",
    "Snapchat",
    "Retail",
    "Wholesale",
    "Online",
    "Apparel",
    "Electronics",
    "Groceries",
    "Packaged",
    "Draught",
    "North",
    "South",
    "Urban",
    "Rural",
];
const UNITS: &[&str] = &["", "%", " million", " billion"];
const UNGROUNDED: &[&str] = &[
    "The survey was conducted online among adults.",
    "Experts expect growth to slow down next year.",
    "Dr. Smith presented the figures at a press conference.",
    "This trend is largely driven by younger consumers.",
    "Detailed results are available in Fig. 3 of the report.",
    "Many respondents also mentioned rising prices.",
];

pub struct SynthConfig {
    pub max_series: usize,
    pub max_points: usize,
    pub max_grounded: usize,
    pub max_ungrounded: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { max_series: 3, max_points: 12, max_grounded: 4, max_ungrounded: 2 }
    }
}

fn value(rng: &mut SeededRng, unit: &str) -> String {
    let v = rng.below(100_000) as f64 / 100.0;
    match rng.below(3) {
        0 => format!("{}{unit}", v.round() as u64),
        1 => format!("{v:.1}{unit}"),
        _ => format!("{v:.2}{unit}"),
    }
}

pub fn record(rng: &mut SeededRng, id: &str, config: &SynthConfig) -> ChartRecord {
    let topic = rng.pick(TOPICS);
    let place = rng.pick(PLACES);
    let years = rng.below(2) == 0;
    let n_series = 1 + rng.index(config.max_series.max(1));
    let n_points = 1 + rng.index(config.max_points.max(1));
    let unit = *rng.pick(UNITS);

    let start = 1990 + rng.below(25);
    let mut cats: Vec<&str> = CATEGORIES.to_vec();
    rng.shuffle(&mut cats);
    let xs: Vec<String> = (0..n_points)
        .map(|i| if years { (start + i as u64).to_string() } else { format!("{} {}", cats[i % cats.len()], i + 1) })
        .collect();

    let mut names: Vec<&str> = CATEGORIES.to_vec();
    rng.shuffle(&mut names);
    let y_labels: Vec<String> = if n_series == 1 {
        vec![if unit == "%" { "share of respondents".to_string() } else { "value".to_string() }]
    } else {
        names[..n_series].iter().map(|s| s.to_string()).collect()
    };
    let series: Vec<Series> = y_labels
        .iter()
        .map(|name| Series::new(name.clone(), xs.iter().map(|x| (x.clone(), value(rng, unit))).collect()))
        .collect();

    let by = if years { "year" } else { "category" };
    let mut sentences = vec![format!("This statistic shows the {} {place} by {by}.", topic.to_lowercase())];
    for _ in 0..rng.index(config.max_grounded + 1) {
        let s = &series[rng.index(series.len())];
        let (x, y) = &s.points[rng.index(s.points.len())];
        sentences.push(match rng.below(3) {
            0 => format!("In {x}, the {} amounted to {y}.", s.name.to_lowercase()),
            1 => format!("{} reached {y} in {x}.", capitalize(&s.name)),
            _ => format!("The value for {x} was {y} according to the chart."),
        });
    }
    for _ in 0..rng.index(config.max_ungrounded + 1) {
        let at = rng.index(sentences.len() + 1);
        sentences.insert(at, rng.pick(UNGROUNDED).to_string());
    }

    let chart_type =
        *rng.pick(&[ChartType::Bar, ChartType::Line, ChartType::Pie, ChartType::Table, ChartType::Unknown]);
    ChartRecord {
        id: id.to_string(),
        title: if rng.below(10) == 0 { String::new() } else { format!("{topic} {place} from {start}") },
        chart_type,
        x_label: if years { "Year".into() } else { "Category".into() },
        y_labels,
        series,
        summary: sentences.join(" "),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `n` records with ids `synth-0000`, `synth-0001`, ...
pub fn corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = SeededRng::new(seed);
    let config = SynthConfig::default();
    let records = (0..n).map(|i| record(&mut rng, &format!("synth-{i:04}"), &config)).collect();
    Corpus::new(records, SplitTag::Unsplit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_valid_and_deterministic() {
        let a = corpus(200, 1);
        assert_eq!(a, corpus(200, 1));
        assert_ne!(a, corpus(200, 2));
        assert!(a.records.iter().all(|r| r.is_valid()));
        assert!(a.duplicate_id().is_none());
    }
}
