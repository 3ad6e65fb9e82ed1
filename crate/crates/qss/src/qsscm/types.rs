use std::fmt;
use std::str::FromStr;

use crate::qstate::{StateLabel, UnitaryKind};
use crate::State;

use super::{ProtocolError, Transcript};

/// A protocol participant: the message sender or one of the receivers.
///
/// Receivers are indexed 0..n-1. `Receiver(0)` is the preparer (Bob);
/// `Receiver(n-1)` is the last encryptor (Zach) and the default final
/// holder of the encoded photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Alice,
    Receiver(usize),
}

impl PartyId {
    pub fn receiver_index(self) -> Option<usize> {
        match self {
            PartyId::Alice => None,
            PartyId::Receiver(i) => Some(i),
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Alice => write!(f, "alice"),
            PartyId::Receiver(i) => write!(f, "receiver:{i}"),
        }
    }
}

impl FromStr for PartyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "alice" {
            return Ok(PartyId::Alice);
        }
        if let Some(idx) = s.strip_prefix("receiver:") {
            return idx
                .parse::<usize>()
                .map(PartyId::Receiver)
                .map_err(|_| format!("bad receiver index in {s:?}"));
        }
        Err(format!("expected \"alice\" or \"receiver:K\", got {s:?}"))
    }
}

/// What a photon ended up being used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonRole {
    Unassigned,
    Check,
    Message,
}

/// One photon's full history.
///
/// `current` equals the fold of `ops_applied` over the preparation label as
/// long as nobody measured or intercepted the photon; measurement collapses
/// `current` without touching the history.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonRecord {
    pub position: usize,
    pub initial_label: StateLabel,
    pub ops_applied: Vec<(PartyId, UnitaryKind)>,
    pub current: State,
    pub role: PhotonRole,
    pub encoded_bit: Option<bool>,
}

impl PhotonRecord {
    pub fn new(position: usize, label: StateLabel) -> Self {
        PhotonRecord {
            position,
            initial_label: label,
            ops_applied: Vec::new(),
            current: State::from_label(label),
            role: PhotonRole::Unassigned,
            encoded_bit: None,
        }
    }

    /// Label of the photon just before Alice's encoding: the preparation
    /// label pushed through every receiver operation (labels are closed
    /// under the encryption set, phases dropped).
    pub fn pre_encoding_label(&self) -> StateLabel {
        self.ops_applied
            .iter()
            .filter(|(party, _)| matches!(party, PartyId::Receiver(_)))
            .fold(self.initial_label, |label, (_, kind)| kind_label(*kind, label))
    }
}

/// Where `kind` sends each preparation label, up to global phase.
pub(crate) fn kind_label(kind: UnitaryKind, label: StateLabel) -> StateLabel {
    match kind {
        UnitaryKind::Id => label,
        // Exchanges the two labels of both bases.
        UnitaryKind::Flip | UnitaryKind::Corr3 => label.flipped(),
        // Exchanges the bases, keeping the bit.
        UnitaryKind::Hada => StateLabel::from_basis_bit(label.basis().other(), label.bit()),
        // H <-> V, fixes the diagonal labels.
        UnitaryKind::Corr1 => match label {
            StateLabel::H => StateLabel::V,
            StateLabel::V => StateLabel::H,
            diag => diag,
        },
        // u <-> d, fixes the rectilinear labels.
        UnitaryKind::Corr2 => match label {
            StateLabel::UDiag => StateLabel::DDiag,
            StateLabel::DDiag => StateLabel::UDiag,
            rect => rect,
        },
    }
}

/// Run parameters. `check_fraction` of the batch is sacrificed for the
/// eavesdropping check; `auth_fraction` of the message is announced for
/// authentication; a run aborts when the check error rate exceeds
/// `error_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub num_receivers: usize,
    pub batch_size: usize,
    pub check_fraction: f64,
    pub error_threshold: f64,
    pub auth_fraction: f64,
    pub master_seed: u64,
    /// Receiver that gets the encoded photons; defaults to the last
    /// encryptor.
    pub final_holder: Option<usize>,
}

impl ProtocolConfig {
    pub fn new(num_receivers: usize, batch_size: usize, master_seed: u64) -> Self {
        ProtocolConfig {
            num_receivers,
            batch_size,
            check_fraction: 0.2,
            error_threshold: 0.05,
            auth_fraction: 0.1,
            master_seed,
            final_holder: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |field: &'static str, reason: String| {
            Err(ProtocolError::InvalidConfig { field, reason })
        };
        if self.num_receivers < 2 {
            return bad("n", format!("need at least 2 receivers, got {}", self.num_receivers));
        }
        if self.batch_size == 0 {
            return bad("N", "batch must contain at least one photon".into());
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return bad(
                "check_fraction",
                format!("{} is outside (0, 1)", self.check_fraction),
            );
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return bad(
                "error_threshold",
                format!("{} is outside [0, 1]", self.error_threshold),
            );
        }
        if !(self.auth_fraction > 0.0 && self.auth_fraction < 1.0) {
            return bad(
                "auth_fraction",
                format!("{} is outside (0, 1)", self.auth_fraction),
            );
        }
        if self.check_count() == 0 {
            return bad(
                "check_fraction",
                format!(
                    "floor({} * {}) photons selects an empty check subset",
                    self.check_fraction, self.batch_size
                ),
            );
        }
        if let Some(fh) = self.final_holder {
            if fh >= self.num_receivers {
                return bad(
                    "final_holder",
                    format!("receiver {fh} does not exist with n = {}", self.num_receivers),
                );
            }
        }
        Ok(())
    }

    pub fn check_count(&self) -> usize {
        (self.check_fraction * self.batch_size as f64).floor() as usize
    }

    pub fn message_capacity(&self) -> usize {
        self.batch_size - self.check_count()
    }

    pub fn final_holder_index(&self) -> usize {
        self.final_holder.unwrap_or(self.num_receivers - 1)
    }

    pub fn receivers(&self) -> Vec<PartyId> {
        (0..self.num_receivers).map(PartyId::Receiver).collect()
    }
}

/// One photon's share data, surrendered during the check or pooled for
/// decoding: the preparation label plus each encryptor's operation in
/// application order.
#[derive(Debug, Clone, PartialEq)]
pub struct Disclosure {
    pub initial_label: StateLabel,
    pub ops: Vec<(PartyId, UnitaryKind)>,
}

/// A proper coalition's view of one photon. Missing operations are treated
/// as Id; a missing label is guessed uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialKnowledge {
    pub initial_label: Option<StateLabel>,
    pub ops: Vec<(PartyId, UnitaryKind)>,
}

/// Alice's public authentication sample: message positions and the bits she
/// encoded there.
#[derive(Debug, Clone, PartialEq)]
pub struct Announcement {
    pub positions: Vec<usize>,
    pub bits: Vec<bool>,
}

/// Result of a full protocol run.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolOutcome {
    /// The check error rate exceeded the threshold; no message was sent.
    Aborted {
        check_error_rate: f64,
        transcript: Transcript,
    },
    Completed {
        decoded_bits: Vec<bool>,
        check_error_rate: f64,
        auth_mismatch_rate: f64,
        auth_pass: bool,
        transcript: Transcript,
    },
}

impl ProtocolOutcome {
    pub fn aborted(&self) -> bool {
        matches!(self, ProtocolOutcome::Aborted { .. })
    }

    pub fn check_error_rate(&self) -> f64 {
        match self {
            ProtocolOutcome::Aborted {
                check_error_rate, ..
            }
            | ProtocolOutcome::Completed {
                check_error_rate, ..
            } => *check_error_rate,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        match self {
            ProtocolOutcome::Aborted { transcript, .. }
            | ProtocolOutcome::Completed { transcript, .. } => transcript,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn party_ids_round_trip_through_strings() {
        for party in [PartyId::Alice, PartyId::Receiver(0), PartyId::Receiver(17)] {
            assert_eq!(party.to_string().parse::<PartyId>().unwrap(), party);
        }
        assert!("receiver:".parse::<PartyId>().is_err());
        assert!("bob".parse::<PartyId>().is_err());
    }

    #[test]
    fn config_defaults_and_counts() {
        let cfg = ProtocolConfig::new(3, 1000, 7);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.check_count(), 200);
        assert_eq!(cfg.message_capacity(), 800);
        assert_eq!(cfg.final_holder_index(), 2);
        assert_eq!(cfg.error_threshold, 0.05);
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let mut cfg = ProtocolConfig::new(3, 1000, 7);
        cfg.check_fraction = 1.5;
        match cfg.validate().unwrap_err() {
            ProtocolError::InvalidConfig { field, .. } => assert_eq!(field, "check_fraction"),
            other => panic!("unexpected error {other:?}"),
        }

        let mut cfg = ProtocolConfig::new(1, 1000, 7);
        cfg.check_fraction = 0.2;
        assert!(matches!(
            cfg.validate().unwrap_err(),
            ProtocolError::InvalidConfig { field: "n", .. }
        ));

        // A fraction that floors to zero check photons is rejected.
        let mut cfg = ProtocolConfig::new(2, 9, 7);
        cfg.check_fraction = 0.1;
        assert!(matches!(
            cfg.validate().unwrap_err(),
            ProtocolError::InvalidConfig {
                field: "check_fraction",
                ..
            }
        ));
    }

    #[test]
    fn label_transport_matches_matrix_action() {
        use crate::qstate::{PureState, Unitary2};
        for kind in [
            UnitaryKind::Id,
            UnitaryKind::Flip,
            UnitaryKind::Hada,
            UnitaryKind::Corr1,
            UnitaryKind::Corr2,
            UnitaryKind::Corr3,
        ] {
            let u = Unitary2::<f64>::from_kind(kind);
            for label in StateLabel::ALL {
                let moved = PureState::from_label(label).apply(&u).unwrap();
                let expected = PureState::from_label(kind_label(kind, label));
                assert!(
                    moved.equal_up_to_phase(&expected, 1e-12).unwrap(),
                    "{kind} on {label}"
                );
            }
        }
    }

    #[test]
    fn pre_encoding_label_folds_receiver_ops_only() {
        let mut photon = PhotonRecord::new(0, StateLabel::H);
        photon.ops_applied.push((PartyId::Receiver(1), UnitaryKind::Hada));
        photon.ops_applied.push((PartyId::Receiver(2), UnitaryKind::Flip));
        photon.ops_applied.push((PartyId::Alice, UnitaryKind::Flip));
        // H -> u -> d; Alice's encoding entry is not part of the fold.
        assert_eq!(photon.pre_encoding_label(), StateLabel::DDiag);
    }
}
