//! Deterministic serialization of batch results.
//!
//! Stats reports are pretty-printed JSON; transcripts are JSON lines with
//! a versioned header so consumers can detect format drift. Both are pure
//! functions of the batch result — writing twice writes identical bytes.

use std::fs;
use std::path::Path;

use serde_json::json;

use super::runner::{StatsReport, TrialRecord};
use super::HarnessError;

pub const TRANSCRIPT_SCHEMA: &str = "qss.transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

/// The stats report as a newline-terminated JSON document.
pub fn stats_json(report: &StatsReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// All trial transcripts as JSON lines: one header line, then per trial a
/// marker line followed by its events in order.
pub fn transcript_lines(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    let header = json!({"schema": TRANSCRIPT_SCHEMA, "version": TRANSCRIPT_VERSION});
    out.push_str(&header.to_string());
    out.push('\n');
    for record in records {
        let marker = json!({
            "trial": record.trial,
            "seed": record.trial_seed,
            "aborted": record.aborted,
            "events": record.transcript.len(),
        });
        out.push_str(&marker.to_string());
        out.push('\n');
        for event in record.transcript.events() {
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
            out.push('\n');
        }
    }
    out
}

pub fn write_stats(report: &StatsReport, path: &Path) -> Result<(), HarnessError> {
    write_text(path, &stats_json(report))
}

pub fn write_transcript(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    write_text(path, &transcript_lines(records))
}

/// Writes whichever outputs were requested; `None` skips one.
pub fn write_outputs(
    report: &StatsReport,
    records: &[TrialRecord],
    stats_path: Option<&Path>,
    trace_path: Option<&Path>,
) -> Result<(), HarnessError> {
    if let Some(path) = stats_path {
        write_stats(report, path)?;
    }
    if let Some(path) = trace_path {
        write_transcript(records, path)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
