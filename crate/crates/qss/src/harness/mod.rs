//! Batch runner: load a TOML run description, execute seeded trials,
//! aggregate their metrics against exact oracle predictions, and write
//! byte-deterministic reports.
//!
//! The config bytes (plus CLI overrides) fully determine every output
//! byte: trial seeds come from a fixed splitting rule
//! ([`crate::seed::trial_master`]), all maps are ordered, and floats
//! serialize through the same shortest-round-trip formatter everywhere.

mod config;
mod output;
mod runner;

pub use config::{
    load_spec, parse_spec, InputSpec, MessageSpec, Protocol, ProtocolSpec, RunSpec,
};
pub use output::{
    stats_json, transcript_lines, write_outputs, write_stats, write_transcript,
    TRANSCRIPT_SCHEMA, TRANSCRIPT_VERSION,
};
pub use runner::{
    oracle_predictions, run_trial, run_trials, BatchResult, MetricSummary, OracleBlock,
    StatsReport, TrialRecord,
};

use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::qsscm::ProtocolError;
use crate::ssqi::SsqiError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field {field}: {reason}")]
    Field {
        field: &'static str,
        reason: String,
    },
    #[error("trial {trial} is out of range (batch has {trials})")]
    TrialOutOfRange { trial: u64, trials: u64 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Ssqi(#[from] SsqiError),
}

impl HarnessError {
    pub(crate) fn field(field: &'static str, reason: impl Into<String>) -> Self {
        HarnessError::Field {
            field,
            reason: reason.into(),
        }
    }
}
