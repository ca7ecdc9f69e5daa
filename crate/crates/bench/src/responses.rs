//! Response logs from the guessing-game study.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RESPONSE_HEADER: [&str; 8] = [
    "participant_id",
    "episode_id",
    "policy_type",
    "stop_time_secs",
    "predicted_goal",
    "true_goal",
    "correct",
    "confidence_1_7",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub participant_id: String,
    pub episode_id: String,
    pub policy_type: String,
    pub stop_time_secs: f64,
    pub predicted_goal: String,
    pub true_goal: String,
    pub correct: bool,
    pub confidence_1_7: u8,
}

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("response log header is '{0}'")]
    Header(String),
    #[error("response row {row}: {source}")]
    Parse {
        row: usize,
        #[source]
        source: csv::Error,
    },
    #[error("response row {row}: {reason}")]
    Invalid { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ResponseRow {
    fn check(&self, row: usize) -> Result<(), ResponseError> {
        let invalid = |reason: String| Err(ResponseError::Invalid { row, reason });
        if self.policy_type != "legible" && self.policy_type != "optimal" {
            return invalid(format!("policy_type '{}'", self.policy_type));
        }
        if !(1..=7).contains(&self.confidence_1_7) {
            return invalid(format!("confidence {} outside 1..=7", self.confidence_1_7));
        }
        if !(self.stop_time_secs >= 0.0) || !self.stop_time_secs.is_finite() {
            return invalid(format!("stop time {}", self.stop_time_secs));
        }
        if self.correct != (self.predicted_goal == self.true_goal) {
            return invalid("correct flag disagrees with the predicted and true goals".into());
        }
        Ok(())
    }
}

/// Parses and validates a response log; row numbers in errors are 1-based
/// data rows.
pub fn read_responses<R: Read>(reader: R) -> Result<Vec<ResponseRow>, ResponseError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != RESPONSE_HEADER {
        return Err(ResponseError::Header(header.join(",")));
    }
    let mut rows = Vec::new();
    for (i, result) in reader.deserialize::<ResponseRow>().enumerate() {
        let row = result.map_err(|source| ResponseError::Parse { row: i + 1, source })?;
        row.check(i + 1)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_responses<W: Write>(rows: &[ResponseRow], out: W) -> Result<(), ResponseError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| ResponseError::Csv(e.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub policy_type: String,
    pub responses: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub mean_stop_time_secs: f64,
    pub mean_confidence: f64,
}

/// Per-policy-type counts and means, in policy-type order.
pub fn aggregate(rows: &[ResponseRow]) -> Vec<ResponseSummary> {
    let mut groups: BTreeMap<&str, Vec<&ResponseRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.policy_type.as_str()).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|(policy, rows)| {
            let n = rows.len() as f64;
            let correct = rows.iter().filter(|r| r.correct).count();
            ResponseSummary {
                policy_type: policy.to_string(),
                responses: rows.len(),
                correct,
                accuracy: correct as f64 / n,
                mean_stop_time_secs: rows.iter().map(|r| r.stop_time_secs).sum::<f64>() / n,
                mean_confidence: rows.iter().map(|r| f64::from(r.confidence_1_7)).sum::<f64>() / n,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[ResponseSummary], out: W) -> Result<(), ResponseError> {
    let mut writer = csv::Writer::from_writer(out);
    for s in summary {
        writer.serialize(s)?;
    }
    writer.flush().map_err(|e| ResponseError::Csv(e.into()))
}
