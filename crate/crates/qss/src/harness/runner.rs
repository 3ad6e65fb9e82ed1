//! Trial execution and aggregation.
//!
//! Each trial is an independent protocol run under its own derived seed;
//! the batch aggregates per-trial metrics and attaches exact predictions
//! with z-scores where the measured spread supports one. Trials never
//! share state, so aggregation order cannot change the report.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;

use crate::adversary::{
    eve_accuracy, predicted_detection_rate, predicted_eve_accuracy, AttackModel, EveInference,
    EveRecord, SegmentPhase,
};
use crate::qsscm::{run_protocol_traced, ProtocolConfig, ProtocolOutcome, Transcript};
use crate::seed;
use crate::ssqi::{
    guessed_correction_mean_fidelity, predicted_pair_mismatch_rate, route_attack, run_ssqi,
    RoutedAttack, SsqiRunOutcome, UnknownQubit,
};

use super::config::{InputSpec, MessageSpec, ProtocolSpec, RunSpec};
use super::HarnessError;

/// Summary of one metric over the trials that reported it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one sample.
    pub std: f64,
    /// Normal-approximation 95% interval around the mean.
    pub ci95: [f64; 2],
    pub count: u64,
}

/// Exact predictions for this batch and the measured deviations from them.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OracleBlock {
    pub predictions: BTreeMap<String, f64>,
    /// (mean - prediction) / (std / sqrt(count)), present only where the
    /// metric was sampled with nonzero spread.
    pub z_scores: BTreeMap<String, f64>,
}

/// Aggregate result of a batch, embedding the fully resolved config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub effective_config: serde_json::Value,
    pub trials_requested: u64,
    pub trials_run: u64,
    /// False when a trial error stopped the batch early.
    pub complete: bool,
    /// True when any trial ended in a threshold abort.
    pub any_abort: bool,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub oracle: OracleBlock,
}

/// One executed trial: its derived seed and full event log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub trial_seed: u64,
    pub aborted: bool,
    pub transcript: Transcript,
}

/// Everything a batch produced. When `failure` is set, the batch stopped
/// at that trial and `report` covers only the earlier ones (and is marked
/// incomplete).
#[derive(Debug)]
pub struct BatchResult {
    pub report: StatsReport,
    pub records: Vec<TrialRecord>,
    pub failure: Option<HarnessError>,
}

/// Runs every trial of `spec` and aggregates. Errors do not propagate:
/// they stop the batch and ride out in [`BatchResult::failure`] so the
/// partial report still gets written.
pub fn run_trials(spec: &RunSpec) -> BatchResult {
    let mut samples: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut records = Vec::new();
    let mut any_abort = false;
    let mut failure = None;
    for trial in 0..spec.trials {
        match run_trial(spec, trial) {
            Ok((rows, record)) => {
                for (key, value) in rows {
                    samples.entry(key).or_default().push(value);
                }
                any_abort |= record.aborted;
                records.push(record);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let metrics = summarize(&samples);
    let predictions = oracle_predictions(spec).unwrap_or_default();
    let z_scores = z_scores(&predictions, &metrics);
    let report = StatsReport {
        effective_config: spec.effective_config(),
        trials_requested: spec.trials,
        trials_run: records.len() as u64,
        complete: failure.is_none(),
        any_abort,
        metrics,
        oracle: OracleBlock {
            predictions,
            z_scores,
        },
    };
    BatchResult {
        report,
        records,
        failure,
    }
}

/// Executes a single trial by index, exactly as [`run_trials`] would.
pub fn run_trial(
    spec: &RunSpec,
    trial: u64,
) -> Result<(Vec<(&'static str, f64)>, TrialRecord), HarnessError> {
    let trial_seed = seed::trial_master(spec.cfg.master_seed, trial);
    let cfg = ProtocolConfig {
        master_seed: trial_seed,
        ..spec.cfg.clone()
    };
    let (rows, aborted, transcript) = match &spec.what {
        ProtocolSpec::Qsscm { message } => qsscm_trial(&cfg, message, &spec.attack, trial_seed)?,
        ProtocolSpec::Ssqi { input, coalition } => {
            ssqi_trial(&cfg, input, coalition, &spec.attack, trial_seed)?
        }
    };
    Ok((
        rows,
        TrialRecord {
            trial,
            trial_seed,
            aborted,
            transcript,
        },
    ))
}

type TrialBody = (Vec<(&'static str, f64)>, bool, Transcript);

fn qsscm_trial(
    cfg: &ProtocolConfig,
    message: &MessageSpec,
    attack: &AttackModel,
    trial_seed: u64,
) -> Result<TrialBody, HarnessError> {
    let bits = match message {
        MessageSpec::Bits(bits) => bits.clone(),
        MessageSpec::Random { length } => {
            let mut rng = seed::stream(trial_seed, "message");
            (0..*length).map(|_| rng.gen::<bool>()).collect()
        }
    };
    let (outcome, trace) = run_protocol_traced(cfg, &bits, attack)?;
    let mut rows = vec![
        ("check_error_rate", outcome.check_error_rate()),
        ("abort_fraction", outcome.aborted() as u8 as f64),
    ];
    if let ProtocolOutcome::Completed {
        decoded_bits,
        auth_mismatch_rate,
        ..
    } = &outcome
    {
        rows.push(("auth_mismatch_rate", *auth_mismatch_rate));
        rows.push(("decode_success", (*decoded_bits == bits) as u8 as f64));
        // Accuracy is defined against encoded bits, so only tapped photons
        // that ended up carrying message bits count.
        let scored: Vec<EveRecord> = trace
            .eve_records
            .iter()
            .filter(|r| {
                trace
                    .truth
                    .iter()
                    .any(|t| t.position == r.photon_position)
            })
            .cloned()
            .collect();
        if !scored.is_empty() {
            rows.push((
                "eve_accuracy",
                eve_accuracy(&scored, &trace.truth, EveInference::RecordOnly)?,
            ));
        }
    }
    let aborted = outcome.aborted();
    Ok((rows, aborted, outcome.transcript().clone()))
}

fn ssqi_trial(
    cfg: &ProtocolConfig,
    input: &InputSpec,
    coalition: &BTreeSet<usize>,
    attack: &AttackModel,
    trial_seed: u64,
) -> Result<TrialBody, HarnessError> {
    let qubit = match input {
        InputSpec::Fixed(q) => *q,
        InputSpec::Random => UnknownQubit::random(&mut seed::stream(trial_seed, "input")),
    };
    let outcome = run_ssqi(cfg, &qubit, coalition, attack)?;
    let mut rows = vec![("abort_fraction", outcome.aborted() as u8 as f64)];
    let (transcript, aborted) = match &outcome {
        SsqiRunOutcome::ChannelCheckFailed { mismatch_rate } => {
            rows.push(("pair_mismatch_rate", *mismatch_rate));
            (Transcript::default(), true)
        }
        SsqiRunOutcome::MessageRunAborted { message_run } => {
            rows.push(("check_error_rate", message_run.check_error_rate()));
            (message_run.transcript().clone(), true)
        }
        SsqiRunOutcome::Completed {
            result,
            message_run,
        } => {
            rows.push(("check_error_rate", message_run.check_error_rate()));
            if let ProtocolOutcome::Completed {
                decoded_bits,
                auth_mismatch_rate,
                ..
            } = message_run
            {
                rows.push(("auth_mismatch_rate", *auth_mismatch_rate));
                let correct = decoded_bits.as_slice() == result.outcome_bits.as_slice();
                rows.push(("decode_success", correct as u8 as f64));
            }
            if let Some(f) = result.fidelity {
                rows.push(("fidelity", f));
            }
            (message_run.transcript().clone(), false)
        }
    };
    Ok((rows, aborted, transcript))
}

fn summarize(samples: &BTreeMap<&'static str, Vec<f64>>) -> BTreeMap<String, MetricSummary> {
    samples
        .iter()
        .filter(|(_, values)| !values.is_empty())
        .map(|(key, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = if values.len() < 2 {
                0.0
            } else {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            };
            let std = var.sqrt();
            let half = 1.96 * std / n.sqrt();
            (
                key.to_string(),
                MetricSummary {
                    mean,
                    std,
                    ci95: [mean - half, mean + half],
                    count: values.len() as u64,
                },
            )
        })
        .collect()
}

/// Exact expectations for the metrics this batch can produce, keyed by
/// metric name. Only configuration goes in; nothing is simulated.
pub fn oracle_predictions(spec: &RunSpec) -> Result<BTreeMap<String, f64>, HarnessError> {
    let mut p = BTreeMap::new();
    let n = spec.cfg.num_receivers;
    match &spec.what {
        ProtocolSpec::Qsscm { .. } => match &spec.attack {
            AttackModel::NoAttack => {
                p.insert("check_error_rate".into(), 0.0);
                p.insert("auth_mismatch_rate".into(), 0.0);
                p.insert("decode_success".into(), 1.0);
            }
            model => {
                let segment = model.segment().expect("bound attacks carry a segment");
                let rate = predicted_detection_rate(model, n)?;
                match segment.phase {
                    // A tap before the check shows up in the check sample.
                    SegmentPhase::Distribution => {
                        p.insert("check_error_rate".into(), rate);
                    }
                    // A tap after it shows up in the authentication sample.
                    SegmentPhase::Return => {
                        p.insert("check_error_rate".into(), 0.0);
                        p.insert("auth_mismatch_rate".into(), rate);
                    }
                }
                p.insert(
                    "eve_accuracy".into(),
                    predicted_eve_accuracy(model, n, EveInference::RecordOnly)?,
                );
            }
        },
        ProtocolSpec::Ssqi { coalition, .. } => match route_attack(&spec.attack, &spec.cfg)? {
            RoutedAttack::None => {
                p.insert("check_error_rate".into(), 0.0);
                p.insert("auth_mismatch_rate".into(), 0.0);
                p.insert("decode_success".into(), 1.0);
                let everyone: BTreeSet<usize> = (0..n).collect();
                if *coalition == everyone {
                    p.insert("fidelity".into(), 1.0);
                } else if coalition.contains(&0) {
                    p.insert("fidelity".into(), guessed_correction_mean_fidelity());
                }
            }
            RoutedAttack::PairChannel => {
                p.insert(
                    "pair_mismatch_rate".into(),
                    predicted_pair_mismatch_rate(&spec.attack),
                );
            }
            RoutedAttack::Inner(model) => {
                let segment = model.segment().expect("routed attacks carry a segment");
                let rate = predicted_detection_rate(&model, n - 1)?;
                match segment.phase {
                    SegmentPhase::Distribution => {
                        p.insert("check_error_rate".into(), rate);
                    }
                    SegmentPhase::Return => {
                        p.insert("check_error_rate".into(), 0.0);
                        p.insert("auth_mismatch_rate".into(), rate);
                    }
                }
            }
        },
    }
    Ok(p)
}

fn z_scores(
    predictions: &BTreeMap<String, f64>,
    metrics: &BTreeMap<String, MetricSummary>,
) -> BTreeMap<String, f64> {
    predictions
        .iter()
        .filter_map(|(key, &prediction)| {
            let m = metrics.get(key)?;
            if m.count == 0 || m.std <= 0.0 {
                return None;
            }
            let z = (m.mean - prediction) / (m.std / (m.count as f64).sqrt());
            Some((key.clone(), z))
        })
        .collect()
}
