//! TOML batch descriptions.
//!
//! A config file names the protocol and its parameters; everything else
//! has a default that is resolved at load time, so a parsed [`RunSpec`]
//! (and the effective-config block it emits) is fully explicit. Unknown
//! keys are rejected rather than ignored — a typo must not silently run a
//! different experiment.
//!
//! Minimal example:
//!
//! ```toml
//! protocol = "qsscm"
//! n = 3
//! N = 1000
//! seed = 42
//! ```
//!
//! Full key set: `protocol`, `n` (receivers), `N` (batch size), `seed`,
//! `trials`, `check_fraction`, `error_threshold`, `auth_fraction`,
//! `final_holder`, a `[message]` table (`qsscm`: `kind = "random"` with
//! `length`, or `kind = "bits"` with a `bits` string of 0s and 1s), an
//! `[input]` table and `coalition` list (`ssqi`: `kind = "random"` or
//! `kind = "amplitudes"` with `alpha`/`beta` as `[re, im]` pairs), and an
//! `[attack]` table (`kind = "none" | "intercept_resend" |
//! "dishonest_receiver"` with `from`/`to`/`phase` naming the tapped hop,
//! plus `basis` or `party`).

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::json;

use crate::adversary::{validate_attack, AttackModel, BasisStrategy, Segment, SegmentPhase};
use crate::qsscm::{PartyId, ProtocolConfig};
use crate::ssqi::{route_attack, UnknownQubit};
use crate::Amplitude;

use super::HarnessError;

/// Which protocol a batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Bit-string sharing over single photons.
    Qsscm,
    /// Qubit sharing by teleportation, outcome bits going through `Qsscm`.
    Ssqi,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Qsscm => "qsscm",
            Protocol::Ssqi => "ssqi",
        }
    }
}

/// Where each trial's message bits come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageSpec {
    /// Fresh bits per trial, drawn from the trial's "message" stream.
    Random { length: usize },
    /// The same fixed bits every trial.
    Bits(Vec<bool>),
}

/// Where each trial's input qubit comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    /// Fresh uniform pure state per trial, from the trial's "input" stream.
    Random,
    /// The same fixed state every trial.
    Fixed(UnknownQubit),
}

/// Protocol-specific parts of a batch description.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolSpec {
    Qsscm {
        message: MessageSpec,
    },
    Ssqi {
        input: InputSpec,
        /// Receivers who pool their shares for reconstruction.
        coalition: BTreeSet<usize>,
    },
}

/// A fully resolved batch: every default filled in, every cross-field
/// constraint checked. `cfg.master_seed` is the batch seed; each trial
/// derives its own.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub cfg: ProtocolConfig,
    pub trials: u64,
    pub attack: AttackModel,
    pub what: ProtocolSpec,
}

impl RunSpec {
    pub fn protocol(&self) -> Protocol {
        match self.what {
            ProtocolSpec::Qsscm { .. } => Protocol::Qsscm,
            ProtocolSpec::Ssqi { .. } => Protocol::Ssqi,
        }
    }

    /// The batch description with every default made explicit, as ordered
    /// JSON. This is what reports embed.
    pub fn effective_config(&self) -> serde_json::Value {
        let mut doc = json!({
            "protocol": self.protocol().name(),
            "n": self.cfg.num_receivers,
            "N": self.cfg.batch_size,
            "seed": self.cfg.master_seed,
            "trials": self.trials,
            "check_fraction": self.cfg.check_fraction,
            "error_threshold": self.cfg.error_threshold,
            "auth_fraction": self.cfg.auth_fraction,
            "final_holder": self.cfg.final_holder_index(),
            "attack": attack_value(&self.attack),
        });
        let doc_map = doc.as_object_mut().expect("literal object");
        match &self.what {
            ProtocolSpec::Qsscm { message } => {
                let value = match message {
                    MessageSpec::Random { length } => json!({"kind": "random", "length": length}),
                    MessageSpec::Bits(bits) => {
                        let text: String =
                            bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                        json!({"kind": "bits", "bits": text})
                    }
                };
                doc_map.insert("message".into(), value);
            }
            ProtocolSpec::Ssqi { input, coalition } => {
                let value = match input {
                    InputSpec::Random => json!({"kind": "random"}),
                    InputSpec::Fixed(q) => json!({
                        "kind": "amplitudes",
                        "alpha": [q.alpha.re, q.alpha.im],
                        "beta": [q.beta.re, q.beta.im],
                    }),
                };
                doc_map.insert("input".into(), value);
                doc_map.insert("coalition".into(), json!(coalition));
            }
        }
        doc
    }
}

fn attack_value(attack: &AttackModel) -> serde_json::Value {
    match attack {
        AttackModel::NoAttack => json!({"kind": "none"}),
        AttackModel::InterceptResend {
            segment,
            basis_strategy,
        } => json!({
            "kind": "intercept_resend",
            "from": segment.from.to_string(),
            "to": segment.to.to_string(),
            "phase": segment.phase.to_string(),
            "basis": basis_name(*basis_strategy),
        }),
        AttackModel::DishonestReceiver { party, segment } => json!({
            "kind": "dishonest_receiver",
            "party": party.receiver_index(),
            "from": segment.from.to_string(),
            "to": segment.to.to_string(),
            "phase": segment.phase.to_string(),
        }),
    }
}

fn basis_name(strategy: BasisStrategy) -> &'static str {
    match strategy {
        BasisStrategy::UniformRandom => "uniform",
        BasisStrategy::AlwaysRectilinear => "rectilinear",
        BasisStrategy::AlwaysDiagonal => "diagonal",
    }
}

// ---------------------------------------------------------------------------
// Raw file shape. Kept separate from the resolved types so serde handles
// only syntax and the resolution step owns all semantics.

fn default_trials() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    protocol: String,
    n: usize,
    #[serde(rename = "N")]
    batch: usize,
    seed: u64,
    #[serde(default = "default_trials")]
    trials: u64,
    check_fraction: Option<f64>,
    error_threshold: Option<f64>,
    auth_fraction: Option<f64>,
    final_holder: Option<usize>,
    coalition: Option<Vec<usize>>,
    message: Option<RawMessage>,
    input: Option<RawInput>,
    attack: Option<RawAttack>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMessage {
    kind: String,
    length: Option<usize>,
    bits: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    kind: String,
    alpha: Option<[f64; 2]>,
    beta: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    kind: String,
    basis: Option<String>,
    party: Option<usize>,
    from: Option<String>,
    to: Option<String>,
    phase: Option<String>,
}

fn bad(field: &'static str, reason: impl Into<String>) -> HarnessError {
    HarnessError::field(field, reason)
}

/// Reads and resolves a batch description from a file.
pub fn load_spec(path: &Path) -> Result<RunSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

/// Resolves a batch description from TOML text.
pub fn parse_spec(text: &str) -> Result<RunSpec, HarnessError> {
    // toml's message already carries line/column diagnostics.
    let raw: RawSpec = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawSpec) -> Result<RunSpec, HarnessError> {
    let protocol = match raw.protocol.as_str() {
        "qsscm" => Protocol::Qsscm,
        "ssqi" => Protocol::Ssqi,
        other => {
            return Err(bad(
                "protocol",
                format!("expected \"qsscm\" or \"ssqi\", got {other:?}"),
            ))
        }
    };
    if raw.trials == 0 {
        return Err(bad("trials", "must be at least 1"));
    }

    let mut cfg = ProtocolConfig::new(raw.n, raw.batch, raw.seed);
    if let Some(f) = raw.check_fraction {
        cfg.check_fraction = f;
    }
    if let Some(t) = raw.error_threshold {
        cfg.error_threshold = t;
    }
    if let Some(f) = raw.auth_fraction {
        cfg.auth_fraction = f;
    }
    cfg.final_holder = raw.final_holder;
    cfg.validate()?;

    let attack = match raw.attack {
        None => AttackModel::NoAttack,
        Some(raw_attack) => resolve_attack(raw_attack)?,
    };

    let what = match protocol {
        Protocol::Qsscm => {
            if raw.input.is_some() {
                return Err(bad("input", "only applies to protocol \"ssqi\""));
            }
            if raw.coalition.is_some() {
                return Err(bad("coalition", "only applies to protocol \"ssqi\""));
            }
            validate_attack(&attack, cfg.num_receivers, cfg.final_holder_index())?;
            let message = resolve_message(raw.message, cfg.message_capacity())?;
            ProtocolSpec::Qsscm { message }
        }
        Protocol::Ssqi => {
            if raw.message.is_some() {
                return Err(bad("message", "only applies to protocol \"qsscm\""));
            }
            if cfg.num_receivers < 3 {
                return Err(bad(
                    "n",
                    format!(
                        "sharing a qubit needs at least 3 receivers (holder plus two bit shares), got {}",
                        cfg.num_receivers
                    ),
                ));
            }
            if cfg.final_holder == Some(0) {
                return Err(bad(
                    "final_holder",
                    "receiver 0 holds the qubit and cannot also hold the bit shares",
                ));
            }
            if cfg.message_capacity() < 2 {
                return Err(bad(
                    "N",
                    "too small to carry the 2 outcome bits after the check sample",
                ));
            }
            route_attack(&attack, &cfg)?;
            let coalition: BTreeSet<usize> = match raw.coalition {
                None => (0..cfg.num_receivers).collect(),
                Some(members) => {
                    for &m in &members {
                        if m >= cfg.num_receivers {
                            return Err(bad(
                                "coalition",
                                format!("member {m} does not exist with n = {}", cfg.num_receivers),
                            ));
                        }
                    }
                    members.into_iter().collect()
                }
            };
            let input = resolve_input(raw.input)?;
            ProtocolSpec::Ssqi { input, coalition }
        }
    };

    Ok(RunSpec {
        cfg,
        trials: raw.trials,
        attack,
        what,
    })
}

fn resolve_message(raw: Option<RawMessage>, capacity: usize) -> Result<MessageSpec, HarnessError> {
    let Some(raw) = raw else {
        // Default: fresh random bits, as many as fit up to 64.
        return Ok(MessageSpec::Random {
            length: capacity.min(64),
        });
    };
    match raw.kind.as_str() {
        "random" => {
            if raw.bits.is_some() {
                return Err(bad("message.bits", "only applies to kind \"bits\""));
            }
            let length = raw.length.unwrap_or_else(|| capacity.min(64));
            if length == 0 {
                return Err(bad("message.length", "must be at least 1"));
            }
            if length > capacity {
                return Err(bad(
                    "message.length",
                    format!("{length} exceeds the non-check capacity of {capacity}"),
                ));
            }
            Ok(MessageSpec::Random { length })
        }
        "bits" => {
            if raw.length.is_some() {
                return Err(bad("message.length", "only applies to kind \"random\""));
            }
            let Some(text) = raw.bits else {
                return Err(bad("message.bits", "required for kind \"bits\""));
            };
            let mut bits = Vec::with_capacity(text.len());
            for c in text.chars() {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    other => {
                        return Err(bad(
                            "message.bits",
                            format!("expected a string of 0s and 1s, found {other:?}"),
                        ))
                    }
                }
            }
            if bits.is_empty() {
                return Err(bad("message.bits", "must contain at least one bit"));
            }
            if bits.len() > capacity {
                return Err(bad(
                    "message.bits",
                    format!(
                        "{} bits exceed the non-check capacity of {capacity}",
                        bits.len()
                    ),
                ));
            }
            Ok(MessageSpec::Bits(bits))
        }
        other => Err(bad(
            "message.kind",
            format!("expected \"random\" or \"bits\", got {other:?}"),
        )),
    }
}

fn resolve_input(raw: Option<RawInput>) -> Result<InputSpec, HarnessError> {
    let Some(raw) = raw else {
        return Ok(InputSpec::Random);
    };
    match raw.kind.as_str() {
        "random" => {
            if raw.alpha.is_some() || raw.beta.is_some() {
                return Err(bad(
                    "input",
                    "alpha/beta only apply to kind \"amplitudes\"",
                ));
            }
            Ok(InputSpec::Random)
        }
        "amplitudes" => {
            let (Some(a), Some(b)) = (raw.alpha, raw.beta) else {
                return Err(bad(
                    "input",
                    "kind \"amplitudes\" needs both alpha and beta as [re, im]",
                ));
            };
            let qubit = UnknownQubit::new(
                Amplitude::new(a[0], a[1]),
                Amplitude::new(b[0], b[1]),
            )
            .map_err(|e| bad("input", e.to_string()))?;
            Ok(InputSpec::Fixed(qubit))
        }
        other => Err(bad(
            "input.kind",
            format!("expected \"random\" or \"amplitudes\", got {other:?}"),
        )),
    }
}

fn resolve_attack(raw: RawAttack) -> Result<AttackModel, HarnessError> {
    match raw.kind.as_str() {
        "none" => {
            if raw.basis.is_some()
                || raw.party.is_some()
                || raw.from.is_some()
                || raw.to.is_some()
                || raw.phase.is_some()
            {
                return Err(bad("attack", "kind \"none\" takes no other keys"));
            }
            Ok(AttackModel::NoAttack)
        }
        "intercept_resend" => {
            if raw.party.is_some() {
                return Err(bad(
                    "attack.party",
                    "only applies to kind \"dishonest_receiver\"",
                ));
            }
            let segment = resolve_segment(&raw)?;
            let basis_strategy = match raw.basis.as_deref() {
                None | Some("uniform") => BasisStrategy::UniformRandom,
                Some("rectilinear") => BasisStrategy::AlwaysRectilinear,
                Some("diagonal") => BasisStrategy::AlwaysDiagonal,
                Some(other) => {
                    return Err(bad(
                        "attack.basis",
                        format!(
                            "expected \"uniform\", \"rectilinear\" or \"diagonal\", got {other:?}"
                        ),
                    ))
                }
            };
            Ok(AttackModel::InterceptResend {
                segment,
                basis_strategy,
            })
        }
        "dishonest_receiver" => {
            if raw.basis.is_some() {
                return Err(bad(
                    "attack.basis",
                    "only applies to kind \"intercept_resend\"",
                ));
            }
            let Some(party) = raw.party else {
                return Err(bad("attack.party", "required for kind \"dishonest_receiver\""));
            };
            let segment = resolve_segment(&raw)?;
            Ok(AttackModel::DishonestReceiver {
                party: PartyId::Receiver(party),
                segment,
            })
        }
        other => Err(bad(
            "attack.kind",
            format!(
                "expected \"none\", \"intercept_resend\" or \"dishonest_receiver\", got {other:?}"
            ),
        )),
    }
}

fn resolve_segment(raw: &RawAttack) -> Result<Segment, HarnessError> {
    let party = |field: &'static str, text: &Option<String>| -> Result<PartyId, HarnessError> {
        let Some(text) = text else {
            return Err(bad(field, "required for a channel attack"));
        };
        text.parse::<PartyId>().map_err(|e| bad(field, e))
    };
    let from = party("attack.from", &raw.from)?;
    let to = party("attack.to", &raw.to)?;
    let phase = match raw.phase.as_deref() {
        Some("distribution") => SegmentPhase::Distribution,
        Some("return") => SegmentPhase::Return,
        Some(other) => {
            return Err(bad(
                "attack.phase",
                format!("expected \"distribution\" or \"return\", got {other:?}"),
            ))
        }
        None => return Err(bad("attack.phase", "required for a channel attack")),
    };
    Ok(Segment { from, to, phase })
}
