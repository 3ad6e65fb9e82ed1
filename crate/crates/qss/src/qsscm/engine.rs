use std::collections::BTreeSet;

use serde_json::json;

use crate::adversary::{
    apply_attack, valid_segments, validate_attack, AttackModel, EveRecord, PhotonTruth, Segment,
    SegmentPhase,
};
use crate::seed;

use super::ops::{
    authenticate, disclosure_for, disclosure_order, encode_message, encrypt_pass, prepare_batch,
    select_check_positions, unwind_and_measure,
};
use super::transcript::{StepTag, Transcript};
use super::types::{Announcement, PartyId, PhotonRole, ProtocolConfig, ProtocolOutcome};
use super::ProtocolError;

/// Residue of a run that never leaves the simulator: the adversary's
/// interception records and the true encoded bits, kept so leak statistics
/// can be scored against ground truth.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub eve_records: Vec<EveRecord>,
    pub truth: Vec<PhotonTruth>,
}

/// The channel hops of a run under this configuration, in traversal order.
pub fn segments(cfg: &ProtocolConfig) -> Vec<Segment> {
    valid_segments(cfg.num_receivers, cfg.final_holder_index())
}

/// Runs one full protocol round: preparation, the encryption chain, the
/// eavesdropping check, message encoding, the return hop, the collaborative
/// decode, and the public spot-check of the decoded bits.
///
/// All randomness derives from `cfg.master_seed` through fixed per-party
/// stream labels, so a run is a pure function of its arguments.
pub fn run_protocol(
    cfg: &ProtocolConfig,
    message: &[bool],
    attack: &AttackModel,
) -> Result<ProtocolOutcome, ProtocolError> {
    run_protocol_traced(cfg, message, attack).map(|(outcome, _)| outcome)
}

/// [`run_protocol`], additionally returning the simulator-only [`RunTrace`].
pub fn run_protocol_traced(
    cfg: &ProtocolConfig,
    message: &[bool],
    attack: &AttackModel,
) -> Result<(ProtocolOutcome, RunTrace), ProtocolError> {
    cfg.validate()?;
    validate_attack(attack, cfg.num_receivers, cfg.final_holder_index())?;
    if message.is_empty() {
        return Err(ProtocolError::InvalidConfig {
            field: "message",
            reason: "must contain at least one bit".into(),
        });
    }
    if message.len() > cfg.message_capacity() {
        return Err(ProtocolError::MessageTooLong {
            len: message.len(),
            capacity: cfg.message_capacity(),
        });
    }

    let mut preparer_rng = seed::stream(cfg.master_seed, "receiver:0");
    let mut alice_rng = seed::stream(cfg.master_seed, "alice");
    let mut decode_rng = seed::stream(cfg.master_seed, "decode");
    let mut eve_rng = seed::stream(cfg.master_seed, "eve");

    let mut transcript = Transcript::default();
    let mut trace = RunTrace::default();

    let mut photons = prepare_batch(cfg.batch_size, &mut preparer_rng)?;
    transcript.push(
        StepTag::Prepare,
        Some(PartyId::Receiver(0)),
        None,
        json!({ "batch_size": cfg.batch_size }),
    );

    // Distribution chain; every intermediate receiver encrypts on arrival.
    let all_positions: Vec<usize> = (0..cfg.batch_size).collect();
    for segment in segments(cfg) {
        if segment.phase != SegmentPhase::Distribution {
            continue;
        }
        transcript.push(
            StepTag::Transfer,
            None,
            None,
            json!({
                "from": segment.from.to_string(),
                "to": segment.to.to_string(),
                "phase": segment.phase.to_string(),
                "photons": cfg.batch_size,
            }),
        );
        if attack.applies_at(segment) {
            let records =
                apply_attack(attack, segment, &mut photons, &all_positions, &mut eve_rng)?;
            trace.eve_records.extend(records);
        }
        if let PartyId::Receiver(i) = segment.to {
            let mut stream = seed::stream(cfg.master_seed, &format!("receiver:{i}"));
            encrypt_pass(&mut photons, PartyId::Receiver(i), &mut stream)?;
            transcript.push(
                StepTag::Encrypt,
                Some(PartyId::Receiver(i)),
                None,
                json!({ "photons": cfg.batch_size }),
            );
        }
    }

    // Eavesdropping check over a random subset; the receivers disclose each
    // check photon's share in a freshly randomized order.
    let check_positions = select_check_positions(cfg.batch_size, cfg.check_fraction, &mut alice_rng)?;
    let receivers = cfg.receivers();
    let mut errors = 0usize;
    for &position in &check_positions {
        photons[position].role = PhotonRole::Check;
        let order = disclosure_order(&receivers, &mut alice_rng)?;
        let disclosure = disclosure_for(&photons[position]);
        transcript.push(
            StepTag::Disclose,
            None,
            Some(position),
            json!({
                "order": order.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "label": disclosure.initial_label.to_string(),
                "ops": disclosure
                    .ops
                    .iter()
                    .map(|(p, k)| json!([p.to_string(), k.to_string()]))
                    .collect::<Vec<_>>(),
            }),
        );
        let (measured, error) = unwind_and_measure(
            &photons[position].current,
            disclosure.initial_label,
            &disclosure.ops,
            &mut alice_rng,
        )?;
        if error {
            errors += 1;
        }
        transcript.push(
            StepTag::Check,
            Some(PartyId::Alice),
            Some(position),
            json!({
                "expected": disclosure.initial_label.to_string(),
                "measured": measured.to_string(),
                "error": error,
            }),
        );
    }
    let check_error_rate = errors as f64 / check_positions.len() as f64;
    let aborted = check_error_rate > cfg.error_threshold;
    transcript.push(
        StepTag::Check,
        Some(PartyId::Alice),
        None,
        json!({
            "photons": check_positions.len(),
            "errors": errors,
            "error_rate": check_error_rate,
            "threshold": cfg.error_threshold,
            "aborted": aborted,
        }),
    );
    if aborted {
        return Ok((
            ProtocolOutcome::Aborted {
                check_error_rate,
                transcript,
            },
            trace,
        ));
    }

    // Encode onto the first non-check photons, in position order.
    let check_set: BTreeSet<usize> = check_positions.iter().copied().collect();
    let message_positions: Vec<usize> = (0..cfg.batch_size)
        .filter(|p| !check_set.contains(p))
        .take(message.len())
        .collect();
    encode_message(&mut photons, &message_positions, message)?;
    for (&position, &bit) in message_positions.iter().zip(message) {
        transcript.push(
            StepTag::Encode,
            Some(PartyId::Alice),
            Some(position),
            json!({ "bit": bit }),
        );
    }
    trace.truth = message_positions
        .iter()
        .map(|&position| PhotonTruth {
            position,
            pre_encoding_label: photons[position].pre_encoding_label(),
            encoded_bit: photons[position].encoded_bit.expect("just encoded"),
        })
        .collect();

    // Return hop: only the message photons travel back.
    let holder = PartyId::Receiver(cfg.final_holder_index());
    let return_segment = Segment::return_hop(holder);
    transcript.push(
        StepTag::Transfer,
        None,
        None,
        json!({
            "from": return_segment.from.to_string(),
            "to": return_segment.to.to_string(),
            "phase": return_segment.phase.to_string(),
            "photons": message_positions.len(),
        }),
    );
    if attack.applies_at(return_segment) {
        let records = apply_attack(
            attack,
            return_segment,
            &mut photons,
            &message_positions,
            &mut eve_rng,
        )?;
        trace.eve_records.extend(records);
    }

    // Collaborative decode at the final holder, all shares pooled.
    let mut decoded = Vec::with_capacity(message_positions.len());
    for &position in &message_positions {
        let disclosure = disclosure_for(&photons[position]);
        let (measured, bit) = unwind_and_measure(
            &photons[position].current,
            disclosure.initial_label,
            &disclosure.ops,
            &mut decode_rng,
        )?;
        decoded.push(bit);
        transcript.push(
            StepTag::Decode,
            Some(holder),
            Some(position),
            json!({ "measured": measured.to_string(), "bit": bit }),
        );
    }

    // Alice announces a small random subset of the true bits; the decode
    // must agree with it.
    let announced_count = ((cfg.auth_fraction * message.len() as f64).floor() as usize).max(1);
    let mut announced_positions =
        rand::seq::index::sample(&mut alice_rng, message.len(), announced_count).into_vec();
    announced_positions.sort_unstable();
    let announcement = Announcement {
        bits: announced_positions.iter().map(|&i| message[i]).collect(),
        positions: announced_positions,
    };
    let (auth_pass, auth_mismatch_rate) =
        authenticate(&decoded, &announcement, cfg.error_threshold)?;
    transcript.push(
        StepTag::Auth,
        Some(PartyId::Alice),
        None,
        json!({
            "announced": announcement.positions.len(),
            "mismatch_rate": auth_mismatch_rate,
            "pass": auth_pass,
        }),
    );

    Ok((
        ProtocolOutcome::Completed {
            decoded_bits: decoded,
            check_error_rate,
            auth_mismatch_rate,
            auth_pass,
            transcript,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{eve_accuracy, BasisStrategy, EveInference};

    fn message(len: usize) -> Vec<bool> {
        (0..len).map(|i| (i * 7) % 3 == 1).collect()
    }

    fn completed(outcome: &ProtocolOutcome) -> (&[bool], f64, f64, bool) {
        match outcome {
            ProtocolOutcome::Completed {
                decoded_bits,
                check_error_rate,
                auth_mismatch_rate,
                auth_pass,
                ..
            } => (decoded_bits, *check_error_rate, *auth_mismatch_rate, *auth_pass),
            ProtocolOutcome::Aborted { .. } => panic!("run aborted unexpectedly"),
        }
    }

    #[test]
    fn honest_run_decodes_exactly_for_any_seed() {
        for seed in [0u64, 1, 42, 0xdead_beef] {
            for n in [2usize, 3, 5] {
                let cfg = ProtocolConfig::new(n, 120, seed);
                let msg = message(60);
                let (outcome, trace) =
                    run_protocol_traced(&cfg, &msg, &AttackModel::NoAttack).unwrap();
                let (decoded, check_rate, auth_rate, pass) = completed(&outcome);
                assert_eq!(decoded, msg.as_slice());
                assert_eq!(check_rate, 0.0);
                assert_eq!(auth_rate, 0.0);
                assert!(pass);
                assert!(trace.eve_records.is_empty());
                assert_eq!(trace.truth.len(), msg.len());
                assert!(trace.truth.iter().zip(&msg).all(|(t, b)| t.encoded_bit == *b));
            }
        }
    }

    #[test]
    fn runs_are_reproducible_and_seed_sensitive() {
        let cfg = ProtocolConfig::new(3, 80, 9001);
        let msg = message(30);
        let a = run_protocol(&cfg, &msg, &AttackModel::NoAttack).unwrap();
        let b = run_protocol(&cfg, &msg, &AttackModel::NoAttack).unwrap();
        let ja = serde_json::to_string(a.transcript()).unwrap();
        let jb = serde_json::to_string(b.transcript()).unwrap();
        assert_eq!(ja, jb);

        let other_cfg = ProtocolConfig::new(3, 80, 9002);
        let c = run_protocol(&other_cfg, &msg, &AttackModel::NoAttack).unwrap();
        let jc = serde_json::to_string(c.transcript()).unwrap();
        assert_ne!(ja, jc);
    }

    #[test]
    fn oversized_messages_are_rejected() {
        let cfg = ProtocolConfig::new(2, 50, 7);
        // capacity = 50 - floor(0.2 * 50) = 40
        let err = run_protocol(&cfg, &vec![false; 41], &AttackModel::NoAttack).unwrap_err();
        assert_eq!(
            err,
            ProtocolError::MessageTooLong {
                len: 41,
                capacity: 40
            }
        );
        assert!(matches!(
            run_protocol(&cfg, &[], &AttackModel::NoAttack).unwrap_err(),
            ProtocolError::InvalidConfig { field: "message", .. }
        ));
    }

    #[test]
    fn transcript_shape_tracks_the_run() {
        let cfg = ProtocolConfig::new(2, 40, 11);
        let msg = message(10);
        let outcome = run_protocol(&cfg, &msg, &AttackModel::NoAttack).unwrap();
        let events = outcome.transcript().events();
        assert_eq!(events[0].step, StepTag::Prepare);
        assert!(events.windows(2).all(|w| w[0].seq < w[1].seq));
        let auths = events.iter().filter(|e| e.step == StepTag::Auth).count();
        assert_eq!(auths, 1);
        let encodes = events.iter().filter(|e| e.step == StepTag::Encode).count();
        assert_eq!(encodes, msg.len());
        // 2 receivers: one encryption pass, three transfers (two out, one back).
        let encrypts = events.iter().filter(|e| e.step == StepTag::Encrypt).count();
        assert_eq!(encrypts, 1);
        let transfers = events.iter().filter(|e| e.step == StepTag::Transfer).count();
        assert_eq!(transfers, 3);
    }

    #[test]
    fn plain_interception_triggers_an_abort_near_its_predicted_rate() {
        let segment = Segment::distribution(PartyId::Receiver(0), PartyId::Receiver(1));
        let attack = AttackModel::InterceptResend {
            segment,
            basis_strategy: BasisStrategy::UniformRandom,
        };
        let cfg = ProtocolConfig::new(2, 2000, 5150);
        let (outcome, trace) = run_protocol_traced(&cfg, &message(64), &attack).unwrap();
        assert!(outcome.aborted());
        // 400 check photons at p = 1/4: 3 sigma is about 0.065.
        let rate = outcome.check_error_rate();
        assert!((rate - 0.25).abs() < 0.065, "rate = {rate}");
        // Distribution attacks see the whole batch.
        assert_eq!(trace.eve_records.len(), 2000);
        // No encoding happened, so no events after the abort summary.
        assert!(outcome
            .transcript()
            .events()
            .iter()
            .all(|e| e.step != StepTag::Encode && e.step != StepTag::Auth));
    }

    #[test]
    fn informed_preparer_stays_near_one_sixth() {
        let attack = AttackModel::DishonestReceiver {
            party: PartyId::Receiver(0),
            segment: Segment::distribution(PartyId::Receiver(1), PartyId::Alice),
        };
        let cfg = ProtocolConfig::new(2, 4000, 31337);
        let outcome = run_protocol(&cfg, &message(64), &attack).unwrap();
        // 800 check photons at p = 1/6: 3 sigma is about 0.040.
        let rate = outcome.check_error_rate();
        assert!((rate - 1.0 / 6.0).abs() < 0.040, "rate = {rate}");
        assert!(outcome.aborted());
    }

    #[test]
    fn return_hop_interception_slips_the_check_but_fails_the_spot_check() {
        let attack = AttackModel::InterceptResend {
            segment: Segment::return_hop(PartyId::Receiver(1)),
            basis_strategy: BasisStrategy::UniformRandom,
        };
        let mut cfg = ProtocolConfig::new(2, 200, 4242);
        cfg.auth_fraction = 0.5;
        let msg = message(100);
        let (outcome, trace) = run_protocol_traced(&cfg, &msg, &attack).unwrap();
        let (_, check_rate, auth_rate, pass) = completed(&outcome);
        // The check ran before the attack touched anything.
        assert_eq!(check_rate, 0.0);
        // 50 announced bits at p = 1/4 mismatch: 3 sigma is about 0.18.
        assert!((auth_rate - 0.25).abs() < 0.19, "auth rate = {auth_rate}");
        assert!(!pass);
        // Only the message photons crossed the attacked hop.
        assert_eq!(trace.eve_records.len(), msg.len());
        // Her own records alone say nothing about the bits.
        let acc = eve_accuracy(&trace.eve_records, &trace.truth, EveInference::RecordOnly).unwrap();
        assert!((acc - 0.5).abs() < 0.15, "accuracy = {acc}");
    }

    #[test]
    fn custom_final_holder_is_respected() {
        let mut cfg = ProtocolConfig::new(3, 60, 77);
        cfg.final_holder = Some(0);
        let outcome = run_protocol(&cfg, &message(20), &AttackModel::NoAttack).unwrap();
        let (decoded, ..) = completed(&outcome);
        assert_eq!(decoded, message(20).as_slice());
        let decode_party = outcome
            .transcript()
            .events()
            .iter()
            .find(|e| e.step == StepTag::Decode)
            .and_then(|e| e.party.clone())
            .unwrap();
        assert_eq!(decode_party, "receiver:0");
    }
}
