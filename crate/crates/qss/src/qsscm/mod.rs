//! The bit-sharing protocol: batch preparation, chained encryption,
//! eavesdropping check, message encoding and collaborative decoding.
//!
//! Roles for `n = num_receivers` receivers plus Alice:
//!
//! * `Receiver(0)` (Bob) prepares a batch of photons, each uniformly one of
//!   the four labels, and keeps the labels secret. He never encrypts; the
//!   labels are his share.
//! * `Receiver(1)..Receiver(n-1)` each apply an independent uniform draw
//!   from {Id, Flip, Hada} to every photon as it passes along the chain.
//!   Their draws are their shares.
//! * Alice receives the fully encrypted batch, sacrifices a random subset
//!   to detect interception (everyone discloses their share for those
//!   photons, in a random order per photon; Alice unwinds the operations
//!   and must see the preparation label exactly), encodes her bits on the
//!   survivors (Id for 0, Flip for 1), and sends them to the final holder.
//!
//! Decoding needs every share: the receivers pool labels and operations,
//! unwind, and measure in the preparation basis. Flip commutes with every
//! encryption operation up to a global phase, so the encoded bit survives
//! the unwinding. A public announcement of a small message subset then
//! authenticates the decode.

mod engine;
mod ops;
mod transcript;
mod types;

pub use engine::{run_protocol, run_protocol_traced, segments, RunTrace};
pub use ops::{
    authenticate, decode_collaborative, decode_partial, disclosure_for, disclosure_order,
    encode_message, encrypt_pass, partial_for, prepare_batch, run_check, select_check_positions,
};
pub use transcript::{StepTag, Transcript, TranscriptEvent};
pub use types::{
    Announcement, Disclosure, PartialKnowledge, PartyId, PhotonRecord, PhotonRole,
    ProtocolConfig, ProtocolOutcome,
};
pub(crate) use types::kind_label;

use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::qstate::QStateError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("config field {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("batch must contain at least one photon")]
    EmptyBatch,
    #[error("check subset is empty (fraction too small for the batch)")]
    EmptyCheckSubset,
    #[error("message of {len} bits exceeds capacity {capacity}")]
    MessageTooLong { len: usize, capacity: usize },
    #[error("{0} does not encrypt in this protocol")]
    NotAnEncryptor(PartyId),
    #[error("need at least {0} receivers")]
    TooFewReceivers(usize),
    #[error("no disclosure for photon {position}")]
    MissingDisclosure { position: usize },
    #[error("pooled knowledge for photon {position} is missing {missing}")]
    IncompleteKnowledge { position: usize, missing: PartyId },
    #[error("expected {expected} bits, got {got}")]
    WrongBitCount { expected: usize, got: usize },
    #[error("photon position {position} out of range for batch of {batch}")]
    PositionOutOfRange { position: usize, batch: usize },
    #[error("announced subset is empty")]
    EmptyAnnouncement,
    #[error("announced position {position} out of range for {len} decoded bits")]
    AnnouncedOutOfRange { position: usize, len: usize },
    #[error(transparent)]
    Attack(#[from] AdversaryError),
    #[error(transparent)]
    State(#[from] QStateError),
}
