//! Chart-to-string linearizations.
//!
//! Five templates are supported:
//!
//! * `obeid`: one tuple per cell, `x | y | index | chart type`, with a header
//!   tuple `x_label | series name | 0 | chart type` opening every series.
//!   Indices restart at 1 for each series. No title.
//! * `obeid-title`: the `obeid` string prefixed by the title and a space.
//! * `kantharaj`: title, two spaces, every y value (series after series),
//!   then every x value, all joined by ` | `.
//! * `kantharaj-labels`: as `kantharaj`, with the x label and the y labels
//!   placed between the title and the y values.
//! * `proposed`: title, label marker, `x_label - y_label ...`, value marker,
//!   then one row per x position holding the x value directly followed by
//!   its y value(s). Rows are joined by the pair separator.
//!
//! Multi-series rows use the x values of the first series. With an empty
//! title the title and the space after it are omitted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChartRecord, Format, LinearizationSpec, Violation};

const FIELD_SEP: &str = " | ";

#[derive(Debug, Error, PartialEq)]
pub enum LinearizeError {
    #[error("record `{id}` has no data points")]
    NoDataPoints { id: String },
    #[error("record `{id}` is invalid: {}", join_violations(.violations))]
    InvalidRecord { id: String, violations: Vec<Violation> },
    #[error("{which} marker must not be empty for the proposed format")]
    EmptyMarker { which: &'static str },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedInput {
    pub text: String,
    pub format: LinearizationSpec,
    pub source_id: String,
}

pub fn linearize(record: &ChartRecord, spec: &LinearizationSpec) -> Result<LinearizedInput, LinearizeError> {
    if record.point_count() == 0 {
        return Err(LinearizeError::NoDataPoints { id: record.id.clone() });
    }
    let violations = record.validate();
    if !violations.is_empty() {
        return Err(LinearizeError::InvalidRecord { id: record.id.clone(), violations });
    }
    let text = match spec.format {
        Format::Obeid => obeid(record),
        Format::ObeidTitle => with_title(&record.title, " ", obeid(record)),
        Format::Kantharaj => kantharaj(record, false),
        Format::KantharajLabels => kantharaj(record, true),
        Format::Proposed => proposed(record, spec)?,
    };
    Ok(LinearizedInput { text, format: spec.clone(), source_id: record.id.clone() })
}

fn with_title(title: &str, gap: &str, body: String) -> String {
    if title.is_empty() { body } else { format!("{title}{gap}{body}") }
}

fn obeid(record: &ChartRecord) -> String {
    let chart = record.chart_type.phrase();
    let mut tuples = Vec::with_capacity(record.point_count() + record.series.len());
    for series in &record.series {
        tuples.push([record.x_label.as_str(), &series.name, "0", chart].join(FIELD_SEP));
        for (i, (x, y)) in series.points.iter().enumerate() {
            tuples.push([x.as_str(), y, &(i + 1).to_string(), chart].join(FIELD_SEP));
        }
    }
    tuples.join(" ")
}

fn kantharaj(record: &ChartRecord, labels: bool) -> String {
    let mut fields: Vec<&str> = Vec::new();
    if labels {
        fields.push(&record.x_label);
        fields.extend(record.y_labels.iter().map(String::as_str));
    }
    for series in &record.series {
        fields.extend(series.points.iter().map(|(_, y)| y.as_str()));
    }
    fields.extend(record.series[0].points.iter().map(|(x, _)| x.as_str()));
    with_title(&record.title, "  ", fields.join(FIELD_SEP))
}

fn proposed(record: &ChartRecord, spec: &LinearizationSpec) -> Result<String, LinearizeError> {
    if spec.label_marker.is_empty() {
        return Err(LinearizeError::EmptyMarker { which: "label" });
    }
    if spec.value_marker.is_empty() {
        return Err(LinearizeError::EmptyMarker { which: "value" });
    }
    let mut labels = vec![record.x_label.as_str()];
    labels.extend(record.y_labels.iter().map(String::as_str));
    let rows: Vec<String> = (0..record.row_count())
        .map(|row| {
            let mut cells = vec![record.series[0].points[row].0.as_str()];
            cells.extend(record.series.iter().map(|s| s.points[row].1.as_str()));
            cells.join(&spec.cell_separator)
        })
        .collect();
    let body = format!(
        "{} {} {} {}",
        spec.label_marker,
        labels.join(&spec.multi_label_joiner),
        spec.value_marker,
        rows.join(&spec.pair_separator)
    );
    Ok(with_title(&record.title, " ", body))
}
