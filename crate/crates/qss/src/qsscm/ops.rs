use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::qstate::{StateLabel, UnitaryKind};
use crate::{State, Unitary};

use super::types::{
    Announcement, Disclosure, PartialKnowledge, PartyId, PhotonRecord, PhotonRole,
};
use super::ProtocolError;

/// Prepares a batch: every photon uniformly one of the four labels.
pub fn prepare_batch<R: Rng + ?Sized>(
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<PhotonRecord>, ProtocolError> {
    if batch_size == 0 {
        return Err(ProtocolError::EmptyBatch);
    }
    Ok((0..batch_size)
        .map(|position| {
            let label = StateLabel::ALL[rng.gen_range(0..4)];
            PhotonRecord::new(position, label)
        })
        .collect())
}

/// One receiver's encryption pass: an independent uniform draw from
/// {Id, Flip, Hada} applied to every photon. The preparer never encrypts.
pub fn encrypt_pass<R: Rng + ?Sized>(
    photons: &mut [PhotonRecord],
    party: PartyId,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    match party.receiver_index() {
        Some(i) if i > 0 => {}
        _ => return Err(ProtocolError::NotAnEncryptor(party)),
    }
    for photon in photons.iter_mut() {
        let kind = UnitaryKind::ENCRYPTION_SET[rng.gen_range(0..3)];
        photon.current = photon.current.apply(&Unitary::from_kind(kind))?;
        photon.ops_applied.push((party, kind));
    }
    Ok(())
}

/// Uniform sample (without replacement) of check positions, sorted.
/// Selects floor(fraction * batch_size) photons, which must be nonzero.
pub fn select_check_positions<R: Rng + ?Sized>(
    batch_size: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<usize>, ProtocolError> {
    if batch_size == 0 {
        return Err(ProtocolError::EmptyBatch);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ProtocolError::InvalidConfig {
            field: "check_fraction",
            reason: format!("{fraction} is outside (0, 1)"),
        });
    }
    let count = (fraction * batch_size as f64).floor() as usize;
    if count == 0 {
        return Err(ProtocolError::EmptyCheckSubset);
    }
    let mut positions = rand::seq::index::sample(rng, batch_size, count).into_vec();
    positions.sort_unstable();
    Ok(positions)
}

/// Uniformly random order in which the receivers disclose their shares for
/// one check photon.
pub fn disclosure_order<R: Rng + ?Sized>(
    receivers: &[PartyId],
    rng: &mut R,
) -> Result<Vec<PartyId>, ProtocolError> {
    if receivers.len() < 2 {
        return Err(ProtocolError::TooFewReceivers(2));
    }
    let mut order = receivers.to_vec();
    order.shuffle(rng);
    Ok(order)
}

/// The honest full disclosure for one photon: preparation label plus every
/// receiver operation in application order (Alice's encoding entries are
/// hers, not part of any share).
pub fn disclosure_for(photon: &PhotonRecord) -> Disclosure {
    Disclosure {
        initial_label: photon.initial_label,
        ops: photon
            .ops_applied
            .iter()
            .filter(|(party, _)| matches!(party, PartyId::Receiver(_)))
            .copied()
            .collect(),
    }
}

/// The view a coalition of receivers has of one photon.
pub fn partial_for(photon: &PhotonRecord, coalition: &BTreeSet<usize>) -> PartialKnowledge {
    PartialKnowledge {
        initial_label: coalition.contains(&0).then_some(photon.initial_label),
        ops: photon
            .ops_applied
            .iter()
            .filter(|(party, _)| {
                party
                    .receiver_index()
                    .is_some_and(|i| i > 0 && coalition.contains(&i))
            })
            .copied()
            .collect(),
    }
}

/// Unwinds `ops` (adjoints, reverse application order) and measures in
/// `label`'s basis. Returns the observed label and whether it differs from
/// `label`.
pub(crate) fn unwind_and_measure<R: Rng + ?Sized>(
    state: &State,
    label: StateLabel,
    ops: &[(PartyId, UnitaryKind)],
    rng: &mut R,
) -> Result<(StateLabel, bool), ProtocolError> {
    let mut state = state.clone();
    for (_, kind) in ops.iter().rev() {
        state = state.apply(&Unitary::from_kind(*kind).adjoint())?;
    }
    let (measured, _) = state.measure_in_basis(label.basis(), rng)?;
    Ok((measured, measured != label))
}

/// Alice's eavesdropping check over the disclosed photons: unwind each
/// photon's disclosed operations, measure in the disclosed preparation
/// basis, and return the fraction that came back wrong. Zero for an
/// undisturbed batch.
pub fn run_check<R: Rng + ?Sized>(
    photons: &[PhotonRecord],
    positions: &[usize],
    disclosures: &BTreeMap<usize, Disclosure>,
    rng: &mut R,
) -> Result<f64, ProtocolError> {
    if positions.is_empty() {
        return Err(ProtocolError::EmptyCheckSubset);
    }
    let mut errors = 0usize;
    for &position in positions {
        let photon = photon_at(photons, position)?;
        let disclosure = disclosures
            .get(&position)
            .ok_or(ProtocolError::MissingDisclosure { position })?;
        let (_, error) =
            unwind_and_measure(&photon.current, disclosure.initial_label, &disclosure.ops, rng)?;
        if error {
            errors += 1;
        }
    }
    Ok(errors as f64 / positions.len() as f64)
}

/// Encodes Alice's bits on the photons at `positions`: Id for 0, Flip
/// for 1.
pub fn encode_message(
    photons: &mut [PhotonRecord],
    positions: &[usize],
    bits: &[bool],
) -> Result<(), ProtocolError> {
    if positions.len() != bits.len() {
        return Err(ProtocolError::WrongBitCount {
            expected: positions.len(),
            got: bits.len(),
        });
    }
    let batch = photons.len();
    for (&position, &bit) in positions.iter().zip(bits) {
        let photon = photons
            .get_mut(position)
            .ok_or(ProtocolError::PositionOutOfRange { position, batch })?;
        let kind = if bit { UnitaryKind::Flip } else { UnitaryKind::Id };
        photon.current = photon.current.apply(&Unitary::from_kind(kind))?;
        photon.ops_applied.push((PartyId::Alice, kind));
        photon.encoded_bit = Some(bit);
        photon.role = PhotonRole::Message;
    }
    Ok(())
}

/// Full-coalition decode: requires every receiver's share for every photon,
/// unwinds the receiver operations and reads the bit in the preparation
/// basis (preparation label observed means 0, its partner means 1).
pub fn decode_collaborative<R: Rng + ?Sized>(
    photons: &[PhotonRecord],
    positions: &[usize],
    pool: &BTreeMap<usize, Disclosure>,
    num_receivers: usize,
    rng: &mut R,
) -> Result<Vec<bool>, ProtocolError> {
    let mut bits = Vec::with_capacity(positions.len());
    for &position in positions {
        let photon = photon_at(photons, position)?;
        let disclosure = pool
            .get(&position)
            .ok_or(ProtocolError::MissingDisclosure { position })?;
        for i in 1..num_receivers {
            let party = PartyId::Receiver(i);
            if !disclosure.ops.iter().any(|(p, _)| *p == party) {
                return Err(ProtocolError::IncompleteKnowledge {
                    position,
                    missing: party,
                });
            }
        }
        let (_, bit) =
            unwind_and_measure(&photon.current, disclosure.initial_label, &disclosure.ops, rng)?;
        bits.push(bit);
    }
    Ok(bits)
}

/// Best-effort decode for a proper coalition: unwinds only the operations
/// the coalition knows (unknown ones are treated as Id), guesses an unknown
/// preparation label uniformly, and reads bits the same way as the full
/// decode. Used for security statistics only.
pub fn decode_partial<R: Rng + ?Sized>(
    photons: &[PhotonRecord],
    positions: &[usize],
    knowledge: &BTreeMap<usize, PartialKnowledge>,
    rng: &mut R,
) -> Result<Vec<bool>, ProtocolError> {
    let mut bits = Vec::with_capacity(positions.len());
    for &position in positions {
        let photon = photon_at(photons, position)?;
        let view = knowledge
            .get(&position)
            .ok_or(ProtocolError::MissingDisclosure { position })?;
        let guessed_label = view
            .initial_label
            .unwrap_or_else(|| StateLabel::ALL[rng.gen_range(0..4)]);
        let (_, bit) = unwind_and_measure(&photon.current, guessed_label, &view.ops, rng)?;
        bits.push(bit);
    }
    Ok(bits)
}

/// Compares the decoded bits against Alice's public announcement.
/// Returns (pass, mismatch rate); the decode passes when the mismatch rate
/// does not exceed `threshold`.
pub fn authenticate(
    decoded: &[bool],
    announced: &Announcement,
    threshold: f64,
) -> Result<(bool, f64), ProtocolError> {
    if announced.positions.is_empty() {
        return Err(ProtocolError::EmptyAnnouncement);
    }
    if announced.positions.len() != announced.bits.len() {
        return Err(ProtocolError::WrongBitCount {
            expected: announced.positions.len(),
            got: announced.bits.len(),
        });
    }
    let mut mismatches = 0usize;
    for (&position, &bit) in announced.positions.iter().zip(&announced.bits) {
        let decoded_bit = decoded
            .get(position)
            .ok_or(ProtocolError::AnnouncedOutOfRange {
                position,
                len: decoded.len(),
            })?;
        if *decoded_bit != bit {
            mismatches += 1;
        }
    }
    let rate = mismatches as f64 / announced.positions.len() as f64;
    Ok((rate <= threshold, rate))
}

fn photon_at(photons: &[PhotonRecord], position: usize) -> Result<&PhotonRecord, ProtocolError> {
    photons.get(position).ok_or(ProtocolError::PositionOutOfRange {
        position,
        batch: photons.len(),
    })
}
