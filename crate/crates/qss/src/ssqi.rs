//! Secret sharing of a quantum state.
//!
//! Alice holds an unknown qubit. The preparer (receiver 0) makes entangled
//! pairs, keeps the home half of each, and sends the travel half to Alice;
//! that hop is spot-checked for tampering by two-basis correlation sampling.
//! Alice then runs a Bell measurement on (input, travel half), which leaves
//! the home qubit one fixed correction away from her input — but which
//! correction is a 2-bit secret only she knows. Instead of announcing it,
//! she distributes the 2 bits to the remaining receivers through the
//! classical bit-sharing protocol. The preparer holds the qubit and the
//! others jointly hold the bits, so reconstruction takes all of them.
//!
//! Randomness derives from `cfg.master_seed` via fixed labels: "pair-check"
//! (correlation sampling), "ssqi/eve" (an adversary on the pair channel),
//! "teleport" (the Bell measurement), "guess" (the preparer's fallback
//! correction guess); the inner bit-sharing run gets the domain-separated
//! sub-master for "ssqi/qsscm".

use std::collections::BTreeSet;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::adversary::{AdversaryError, AttackModel, BasisStrategy, Segment};
use crate::qsscm::{run_protocol, PartyId, ProtocolConfig, ProtocolError, ProtocolOutcome};
use crate::qstate::{
    bell_measure, bell_state, Basis, BellOutcome, PureState, QStateError, StateLabel, UnitaryKind,
};
use crate::seed;
use crate::{Amplitude, State, Unitary};

/// The 1-qubit state being shared. Only its holder ever sees the
/// amplitudes; everything downstream treats it as opaque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnknownQubit {
    pub alpha: Amplitude,
    pub beta: Amplitude,
}

impl UnknownQubit {
    pub fn new(alpha: Amplitude, beta: Amplitude) -> Result<Self, SsqiError> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(SsqiError::NotNormalized(norm));
        }
        Ok(UnknownQubit { alpha, beta })
    }

    /// Uniformly random pure state: four standard normals, normalized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let draw = |r: &mut R| {
                Complex::new(
                    r.sample::<f64, _>(StandardNormal),
                    r.sample::<f64, _>(StandardNormal),
                )
            };
            let (alpha, beta) = (draw(rng), draw(rng));
            let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
            if norm > 1e-6 {
                return UnknownQubit {
                    alpha: alpha / norm,
                    beta: beta / norm,
                };
            }
        }
    }

    pub fn state(&self) -> State {
        PureState::new(vec![self.alpha, self.beta]).expect("normalized by construction")
    }
}

/// What one sharing round produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SsqiOutcome {
    pub bell_outcome: BellOutcome,
    /// The true 2-bit encoding of `bell_outcome` (what Alice sent; what the
    /// inner run decoded lives in the message-run outcome).
    pub outcome_bits: [bool; 2],
    /// Present when the coalition includes the qubit holder.
    pub reconstructed: Option<State>,
    /// Overlap with the input, when a reconstruction exists.
    pub fidelity: Option<f64>,
}

/// Full result of [`run_ssqi`], including the early exits.
#[derive(Debug, Clone, PartialEq)]
pub enum SsqiRunOutcome {
    /// The sampled pair correlations failed; nothing was teleported.
    ChannelCheckFailed { mismatch_rate: f64 },
    /// The inner bit-sharing run aborted during its own check.
    MessageRunAborted { message_run: ProtocolOutcome },
    Completed {
        result: SsqiOutcome,
        message_run: ProtocolOutcome,
    },
}

impl SsqiRunOutcome {
    pub fn completed(&self) -> Option<&SsqiOutcome> {
        match self {
            SsqiRunOutcome::Completed { result, .. } => Some(result),
            _ => None,
        }
    }

    pub fn aborted(&self) -> bool {
        !matches!(self, SsqiRunOutcome::Completed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SsqiError {
    #[error("input amplitudes have squared norm {0}, not 1")]
    NotNormalized(f64),
    #[error("pair check sample is empty")]
    EmptySample,
    #[error("sample fraction {0} is outside (0, 1]")]
    BadSampleFraction(f64),
    #[error("sharing a qubit needs at least 3 receivers (holder plus two bit shares), got {0}")]
    TooFewReceivers(usize),
    #[error("coalition member {0} is not one of the receivers")]
    UnknownCoalitionMember(usize),
    #[error("the final holder of the bit shares cannot be the qubit holder")]
    HolderIsQubitHolder,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Teleports `input` through a fresh perfect pair.
///
/// Qubit order is (input, home, travel); the Bell measurement consumes
/// (input, travel) and returns the home qubit's state alongside the
/// outcome.
pub fn teleport<R: Rng + ?Sized>(
    input: &UnknownQubit,
    rng: &mut R,
) -> Result<(BellOutcome, State), SsqiError> {
    teleport_with_pair(input, &bell_state(BellOutcome::PhiPlus), rng)
}

/// [`teleport`] through an already-distributed (home, travel) pair, which
/// may have been disturbed in transit.
pub fn teleport_with_pair<R: Rng + ?Sized>(
    input: &UnknownQubit,
    pair: &State,
    rng: &mut R,
) -> Result<(BellOutcome, State), SsqiError> {
    if pair.num_qubits() != 2 {
        return Err(QStateError::DimensionMismatch {
            expected: 4,
            got: pair.amps().len(),
        }
        .into());
    }
    let full = input.state().tensor(pair)?;
    let (outcome, home) = bell_measure(&full, (0, 2), rng)?;
    Ok((outcome, home))
}

/// The correction the home-qubit holder applies for each measurement
/// outcome to recover the input exactly.
pub fn correction_for(outcome: BellOutcome) -> UnitaryKind {
    match outcome {
        BellOutcome::PhiPlus => UnitaryKind::Id,
        BellOutcome::PsiPlus => UnitaryKind::Corr1,
        BellOutcome::PhiMinus => UnitaryKind::Corr2,
        BellOutcome::PsiMinus => UnitaryKind::Corr3,
    }
}

/// Fixed 2-bit encoding of a measurement outcome.
pub fn outcome_bits(outcome: BellOutcome) -> [bool; 2] {
    outcome.bits()
}

/// Inverse of [`outcome_bits`].
pub fn bits_outcome(bits: [bool; 2]) -> BellOutcome {
    BellOutcome::from_bits(bits)
}

/// The home qubit's state for each outcome, written as a direct table.
/// Serves as an independent check on the 3-qubit measurement route.
pub fn branch_state(input: &UnknownQubit, outcome: BellOutcome) -> State {
    let (a, b) = (input.alpha, input.beta);
    let amps = match outcome {
        BellOutcome::PhiPlus => vec![a, b],
        BellOutcome::PsiPlus => vec![b, a],
        BellOutcome::PhiMinus => vec![a, -b],
        BellOutcome::PsiMinus => vec![-b, a],
    };
    PureState::new(amps).expect("input norm is preserved")
}

/// The adversary's measurement basis on one travel photon, if she attacks
/// at all. Pairs carry no labels and no operations, so inside knowledge
/// buys nothing here and a dishonest receiver degrades to a uniform coin.
fn eve_basis<R: Rng + ?Sized>(attack: &AttackModel, rng: &mut R) -> Option<Basis> {
    match attack {
        AttackModel::NoAttack => None,
        AttackModel::InterceptResend { basis_strategy, .. } => Some(basis_strategy.pick(rng)),
        AttackModel::DishonestReceiver { .. } => Some(BasisStrategy::UniformRandom.pick(rng)),
    }
}

/// Samples distributed pairs and measures both halves in a per-pair random
/// common basis: a perfect pair agrees in either basis, so any mismatch is
/// channel disturbance. Returns (mismatch rate, abort).
pub fn pair_distribution_check<R: Rng + ?Sized>(
    num_pairs: usize,
    sample_fraction: f64,
    threshold: f64,
    attack: &AttackModel,
    rng: &mut R,
) -> Result<(f64, bool), SsqiError> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(SsqiError::BadSampleFraction(sample_fraction));
    }
    let sampled = (sample_fraction * num_pairs as f64).floor() as usize;
    if sampled == 0 {
        return Err(SsqiError::EmptySample);
    }
    let mut mismatches = 0usize;
    for _ in 0..sampled {
        let mut pair: State = bell_state(BellOutcome::PhiPlus);
        if let Some(basis) = eve_basis(attack, rng) {
            let (_, collapsed) = pair.measure_qubit_in_basis(1, basis, rng)?;
            pair = collapsed;
        }
        let common = if rng.gen::<bool>() {
            Basis::Rectilinear
        } else {
            Basis::Diagonal
        };
        let (home, after) = pair.measure_qubit_in_basis(0, common, rng)?;
        let (travel, _) = after.measure_qubit_in_basis(1, common, rng)?;
        if home != travel {
            mismatches += 1;
        }
    }
    let rate = mismatches as f64 / sampled as f64;
    Ok((rate, rate > threshold))
}

/// The channel hops of a sharing round: the pair hop from the preparer to
/// Alice, then the bit-sharing hops among the remaining receivers.
pub fn ssqi_segments(cfg: &ProtocolConfig) -> Vec<Segment> {
    let n = cfg.num_receivers;
    let mut segments = vec![Segment::distribution(PartyId::Receiver(0), PartyId::Alice)];
    for i in 1..n - 1 {
        segments.push(Segment::distribution(
            PartyId::Receiver(i),
            PartyId::Receiver(i + 1),
        ));
    }
    segments.push(Segment::distribution(
        PartyId::Receiver(n - 1),
        PartyId::Alice,
    ));
    segments.push(Segment::return_hop(PartyId::Receiver(
        cfg.final_holder.unwrap_or(n - 1),
    )));
    segments
}

/// Where an attack lands in this protocol: on the pair hop, or inside the
/// bit-sharing sub-run with all receiver indices shifted down by one
/// (the preparer does not take part there).
#[derive(Debug, Clone, PartialEq)]
pub enum RoutedAttack {
    None,
    PairChannel,
    Inner(AttackModel),
}

/// Resolves where `attack` lands, rejecting segments that are not hops of
/// this protocol. [`run_ssqi`] applies the same routing.
pub fn route_attack(attack: &AttackModel, cfg: &ProtocolConfig) -> Result<RoutedAttack, SsqiError> {
    let Some(segment) = attack.segment() else {
        return Ok(RoutedAttack::None);
    };
    if !ssqi_segments(cfg).contains(&segment) {
        return Err(AdversaryError::InvalidSegment(segment.to_string()).into());
    }
    let pair_hop = Segment::distribution(PartyId::Receiver(0), PartyId::Alice);
    if segment == pair_hop {
        if let AttackModel::DishonestReceiver { party, .. } = attack {
            if *party == PartyId::Receiver(0) {
                return Err(AdversaryError::PartyIsEndpoint(*party).into());
            }
        }
        return Ok(RoutedAttack::PairChannel);
    }
    let shift = |p: PartyId| match p {
        PartyId::Alice => PartyId::Alice,
        PartyId::Receiver(k) => PartyId::Receiver(k - 1),
    };
    let inner_segment = Segment {
        from: shift(segment.from),
        to: shift(segment.to),
        phase: segment.phase,
    };
    let inner = match attack {
        AttackModel::NoAttack => unreachable!("handled above"),
        AttackModel::InterceptResend { basis_strategy, .. } => AttackModel::InterceptResend {
            segment: inner_segment,
            basis_strategy: *basis_strategy,
        },
        // The preparer is an outsider to the bit-sharing run: she knows
        // nothing about its photons, which is exactly a uniform intercept.
        AttackModel::DishonestReceiver {
            party: PartyId::Receiver(0),
            ..
        } => AttackModel::InterceptResend {
            segment: inner_segment,
            basis_strategy: BasisStrategy::UniformRandom,
        },
        AttackModel::DishonestReceiver { party, .. } => AttackModel::DishonestReceiver {
            party: shift(*party),
            segment: inner_segment,
        },
    };
    Ok(RoutedAttack::Inner(inner))
}

/// One full sharing round: pair-channel check, teleport, distribution of
/// the outcome bits through the bit-sharing protocol, and the coalition's
/// reconstruction attempt. All randomness derives from `cfg.master_seed`.
///
/// `cfg.num_receivers` counts every receiver including the qubit holder;
/// the bits go to the other `n - 1`. The coalition reconstructs exactly
/// when it is everyone; with the holder but not everyone, the holder falls
/// back to a uniformly guessed correction; without the holder there is
/// nothing to reconstruct.
pub fn run_ssqi(
    cfg: &ProtocolConfig,
    input: &UnknownQubit,
    coalition: &BTreeSet<usize>,
    attack: &AttackModel,
) -> Result<SsqiRunOutcome, SsqiError> {
    cfg.validate()?;
    if cfg.num_receivers < 3 {
        return Err(SsqiError::TooFewReceivers(cfg.num_receivers));
    }
    for &member in coalition {
        if member >= cfg.num_receivers {
            return Err(SsqiError::UnknownCoalitionMember(member));
        }
    }
    let inner_final_holder = match cfg.final_holder {
        None => None,
        Some(0) => return Err(SsqiError::HolderIsQubitHolder),
        Some(k) => Some(k - 1),
    };
    let routed = route_attack(attack, cfg)?;

    let inner_cfg = ProtocolConfig {
        num_receivers: cfg.num_receivers - 1,
        batch_size: cfg.batch_size,
        check_fraction: cfg.check_fraction,
        error_threshold: cfg.error_threshold,
        auth_fraction: cfg.auth_fraction,
        master_seed: seed::sub_master(cfg.master_seed, "ssqi/qsscm"),
        final_holder: inner_final_holder,
    };
    inner_cfg.validate()?;

    // Pair distribution and its correlation check.
    let pair_attack = match routed {
        RoutedAttack::PairChannel => attack.clone(),
        _ => AttackModel::NoAttack,
    };
    let mut check_rng = seed::stream(cfg.master_seed, "pair-check");
    let (mismatch_rate, abort) = pair_distribution_check(
        cfg.batch_size,
        cfg.check_fraction,
        cfg.error_threshold,
        &pair_attack,
        &mut check_rng,
    )?;
    if abort {
        return Ok(SsqiRunOutcome::ChannelCheckFailed { mismatch_rate });
    }

    // The teleportation pair crosses the same channel.
    let mut pair = bell_state(BellOutcome::PhiPlus);
    let mut eve_rng = seed::stream(cfg.master_seed, "ssqi/eve");
    if let Some(basis) = eve_basis(&pair_attack, &mut eve_rng) {
        let (_, collapsed) = pair.measure_qubit_in_basis(1, basis, &mut eve_rng)?;
        pair = collapsed;
    }
    let mut teleport_rng = seed::stream(cfg.master_seed, "teleport");
    let (bell_outcome, home) = teleport_with_pair(input, &pair, &mut teleport_rng)?;
    let true_bits = outcome_bits(bell_outcome);

    // The outcome bits travel as a 2-bit message among the other receivers.
    let inner_attack = match routed {
        RoutedAttack::Inner(model) => model,
        _ => AttackModel::NoAttack,
    };
    let message_run = run_protocol(&inner_cfg, &true_bits, &inner_attack)?;
    let decoded = match &message_run {
        ProtocolOutcome::Aborted { .. } => {
            return Ok(SsqiRunOutcome::MessageRunAborted { message_run });
        }
        ProtocolOutcome::Completed { decoded_bits, .. } => [decoded_bits[0], decoded_bits[1]],
    };

    // Reconstruction by the coalition.
    let everyone: BTreeSet<usize> = (0..cfg.num_receivers).collect();
    let (reconstructed, fidelity) = if *coalition == everyone {
        let correction = correction_for(bits_outcome(decoded));
        let corrected = home.apply(&Unitary::from_kind(correction))?;
        let f = corrected.fidelity(&input.state())?;
        (Some(corrected), Some(f))
    } else if coalition.contains(&0) {
        // The holder alone: a uniformly guessed correction.
        let mut guess_rng = seed::stream(cfg.master_seed, "guess");
        let guess = [
            UnitaryKind::Id,
            UnitaryKind::Corr1,
            UnitaryKind::Corr2,
            UnitaryKind::Corr3,
        ][guess_rng.gen_range(0..4)];
        let corrected = home.apply(&Unitary::from_kind(guess))?;
        let f = corrected.fidelity(&input.state())?;
        (Some(corrected), Some(f))
    } else {
        (None, None)
    };

    Ok(SsqiRunOutcome::Completed {
        result: SsqiOutcome {
            bell_outcome,
            outcome_bits: true_bits,
            reconstructed,
            fidelity,
        },
        message_run,
    })
}

// ---------------------------------------------------------------------------
// Exact enumeration oracles.

/// P(label) branches of measuring one qubit of a 2-qubit state, with the
/// collapsed state, probabilities renormalized over the basis pair.
fn qubit_branches(state: &State, qubit: usize, basis: Basis) -> Vec<(f64, StateLabel, State)> {
    let amps = state.amps();
    let mut raw = Vec::with_capacity(2);
    for label in basis.labels() {
        let w: State = PureState::from_label(label);
        let w = w.amps().to_vec();
        // Contract `qubit` against the label vector.
        let idx = |y: usize, x: usize| if qubit == 0 { y * 2 + x } else { x * 2 + y };
        let mut partner = [Amplitude::new(0.0, 0.0); 2];
        for x in 0..2 {
            for (y, wy) in w.iter().enumerate() {
                partner[x] += wy.conj() * amps[idx(y, x)];
            }
        }
        let p = partner[0].norm_sqr() + partner[1].norm_sqr();
        raw.push((p, label, partner, w));
    }
    let total: f64 = raw.iter().map(|(p, ..)| p).sum();
    raw.into_iter()
        .filter(|(p, ..)| *p > 0.0)
        .map(|(p, label, partner, w)| {
            let scale = 1.0 / p.sqrt();
            let mut collapsed = vec![Amplitude::new(0.0, 0.0); 4];
            for x in 0..2 {
                for (y, wy) in w.iter().enumerate() {
                    let i = if qubit == 0 { y * 2 + x } else { x * 2 + y };
                    collapsed[i] = wy * partner[x] * scale;
                }
            }
            let state = PureState::new(collapsed).expect("renormalized projection");
            (p / total, label, state)
        })
        .collect()
}

/// Exact mismatch probability of one sampled pair under the given attack:
/// enumerate the adversary's basis and outcome, then the common check basis
/// and both measurement outcomes.
pub fn predicted_pair_mismatch_rate(attack: &AttackModel) -> f64 {
    let pair = bell_state(BellOutcome::PhiPlus);
    let eve_branches: Vec<(f64, State)> = match attack {
        AttackModel::NoAttack => vec![(1.0, pair.clone())],
        AttackModel::InterceptResend { basis_strategy, .. } => {
            strategy_pair_branches(&pair, *basis_strategy)
        }
        AttackModel::DishonestReceiver { .. } => {
            strategy_pair_branches(&pair, BasisStrategy::UniformRandom)
        }
    };
    let mut rate = 0.0;
    for (p_eve, disturbed) in &eve_branches {
        for basis in [Basis::Rectilinear, Basis::Diagonal] {
            for (p_home, home, after) in qubit_branches(disturbed, 0, basis) {
                for (p_travel, travel, _) in qubit_branches(&after, 1, basis) {
                    if home != travel {
                        rate += 0.5 * p_eve * p_home * p_travel;
                    }
                }
            }
        }
    }
    rate
}

fn strategy_pair_branches(pair: &State, strategy: BasisStrategy) -> Vec<(f64, State)> {
    let mut branches = Vec::new();
    for (p_basis, basis) in strategy.branches() {
        for (p, _, collapsed) in qubit_branches(pair, 1, basis) {
            branches.push((p_basis * p, collapsed));
        }
    }
    branches
}

/// Mean fidelity of the holder's uniformly guessed correction, averaged
/// over all outcomes and over uniformly random inputs. Uses the spherical
/// average |<psi| M |psi>|^2 = (|tr M|^2 + 2) / 6 for a 2x2 unitary M.
pub fn guessed_correction_mean_fidelity() -> f64 {
    let corrections = [
        UnitaryKind::Id,
        UnitaryKind::Corr1,
        UnitaryKind::Corr2,
        UnitaryKind::Corr3,
    ];
    let mut total = 0.0;
    for outcome in corrections {
        for guess in corrections {
            // Reconstructed = guess applied to (outcome^-1 input), so the
            // net operator is guess * outcome^dagger.
            let m = Unitary::from_kind(guess).compose(&Unitary::from_kind(outcome).adjoint());
            let trace = m.entry(0, 0) + m.entry(1, 1);
            total += (trace.norm_sqr() + 2.0) / 6.0;
        }
    }
    total / 16.0
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::qstate::bell_project;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    const ALL_OUTCOMES: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PsiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiMinus,
    ];

    fn pair_hop() -> Segment {
        Segment::distribution(PartyId::Receiver(0), PartyId::Alice)
    }

    #[test]
    fn unknown_qubits_validate_their_norm() {
        let bad = UnknownQubit::new(Amplitude::new(1.0, 0.0), Amplitude::new(0.5, 0.0));
        assert!(matches!(bad.unwrap_err(), SsqiError::NotNormalized(_)));
        let mut r = rng(1);
        for _ in 0..100 {
            let q = UnknownQubit::random(&mut r);
            let norm = q.alpha.norm_sqr() + q.beta.norm_sqr();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn every_forced_branch_corrects_back_to_the_input() {
        let mut r = rng(2);
        for _ in 0..1000 {
            let input = UnknownQubit::random(&mut r);
            for outcome in ALL_OUTCOMES {
                let corrected = branch_state(&input, outcome)
                    .apply(&Unitary::from_kind(correction_for(outcome)))
                    .unwrap();
                assert!(corrected.equal_up_to_phase(&input.state(), 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn measurement_route_matches_the_branch_table() {
        let mut r = rng(3);
        for _ in 0..200 {
            let input = UnknownQubit::random(&mut r);
            let full = input
                .state()
                .tensor(&bell_state(BellOutcome::PhiPlus))
                .unwrap();
            for outcome in ALL_OUTCOMES {
                let (p, home) = bell_project(&full, (0, 2), outcome).unwrap();
                assert!((p - 0.25).abs() < 1e-9, "p = {p}");
                assert!(home
                    .equal_up_to_phase(&branch_state(&input, outcome), 1e-9)
                    .unwrap());
            }
        }
    }

    #[test]
    fn sampled_outcomes_are_uniform() {
        let mut r = rng(4);
        let input = UnknownQubit::random(&mut r);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let (outcome, _) = teleport(&input, &mut r).unwrap();
            counts[ALL_OUTCOMES.iter().position(|o| *o == outcome).unwrap()] += 1;
        }
        // 3 sigma around 2500 over 10^4 draws.
        for c in counts {
            assert!((2370..=2630).contains(&c), "counts = {counts:?}");
        }
    }

    #[test]
    fn teleport_then_correct_recovers_the_input() {
        let mut r = rng(5);
        for _ in 0..200 {
            let input = UnknownQubit::random(&mut r);
            let (outcome, home) = teleport(&input, &mut r).unwrap();
            let corrected = home
                .apply(&Unitary::from_kind(correction_for(outcome)))
                .unwrap();
            assert!(corrected.equal_up_to_phase(&input.state(), 1e-9).unwrap());
        }
    }

    #[test]
    fn bit_encoding_is_the_documented_bijection() {
        assert_eq!(outcome_bits(BellOutcome::PhiPlus), [false, false]);
        assert_eq!(outcome_bits(BellOutcome::PsiPlus), [false, true]);
        assert_eq!(outcome_bits(BellOutcome::PhiMinus), [true, false]);
        assert_eq!(outcome_bits(BellOutcome::PsiMinus), [true, true]);
        for outcome in ALL_OUTCOMES {
            assert_eq!(bits_outcome(outcome_bits(outcome)), outcome);
        }
    }

    #[test]
    fn honest_pair_check_is_exactly_clean() {
        let mut r = rng(6);
        let (rate, abort) =
            pair_distribution_check(2000, 0.9, 0.05, &AttackModel::NoAttack, &mut r).unwrap();
        assert_eq!(rate, 0.0);
        assert!(!abort);
    }

    #[test]
    fn pair_check_rejects_degenerate_samples() {
        let mut r = rng(7);
        assert_eq!(
            pair_distribution_check(9, 0.1, 0.05, &AttackModel::NoAttack, &mut r).unwrap_err(),
            SsqiError::EmptySample
        );
        assert!(matches!(
            pair_distribution_check(100, 1.5, 0.05, &AttackModel::NoAttack, &mut r).unwrap_err(),
            SsqiError::BadSampleFraction(_)
        ));
    }

    #[test]
    fn intercepted_pairs_mismatch_at_a_quarter() {
        let attack = AttackModel::InterceptResend {
            segment: pair_hop(),
            basis_strategy: BasisStrategy::UniformRandom,
        };
        let mut r = rng(8);
        let (rate, abort) = pair_distribution_check(10_000, 0.2, 0.05, &attack, &mut r).unwrap();
        // 2000 sampled pairs at p = 1/4: 3 sigma is about 0.029.
        assert!((rate - 0.25).abs() < 0.03, "rate = {rate}");
        assert!(abort);
    }

    #[test]
    fn pair_mismatch_oracle_matches_hand_derivation() {
        assert_eq!(predicted_pair_mismatch_rate(&AttackModel::NoAttack), 0.0);
        for strategy in [
            BasisStrategy::UniformRandom,
            BasisStrategy::AlwaysRectilinear,
            BasisStrategy::AlwaysDiagonal,
        ] {
            let attack = AttackModel::InterceptResend {
                segment: pair_hop(),
                basis_strategy: strategy,
            };
            let rate = predicted_pair_mismatch_rate(&attack);
            // Only a checker basis differing from the adversary's (half the
            // time for her every strategy) decorrelates the halves, and then
            // they disagree half the time.
            assert!((rate - 0.25).abs() < 1e-12, "{strategy:?}: {rate}");
        }
        let dishonest = AttackModel::DishonestReceiver {
            party: PartyId::Receiver(1),
            segment: pair_hop(),
        };
        let rate = predicted_pair_mismatch_rate(&dishonest);
        assert!((rate - 0.25).abs() < 1e-12, "dishonest: {rate}");
    }

    #[test]
    fn guessing_oracle_sits_at_one_half() {
        let mean = guessed_correction_mean_fidelity();
        // 4 exact hits plus 12 traceless misses at 1/3 each, over 16.
        assert!((mean - 0.5).abs() < 1e-12, "mean = {mean}");
    }

    fn base_cfg(seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(3, 100, seed)
    }

    fn everyone() -> BTreeSet<usize> {
        [0, 1, 2].into()
    }

    #[test]
    fn full_coalition_reconstructs_exactly() {
        for seed in [0u64, 9, 1234] {
            let input = UnknownQubit::random(&mut rng(seed ^ 0xabcd));
            let out = run_ssqi(&base_cfg(seed), &input, &everyone(), &AttackModel::NoAttack)
                .unwrap();
            let result = out.completed().expect("honest run completes");
            assert_eq!(result.outcome_bits, result.bell_outcome.bits());
            let fidelity = result.fidelity.unwrap();
            assert!((fidelity - 1.0).abs() < 1e-9, "fidelity = {fidelity}");
            assert!(result
                .reconstructed
                .as_ref()
                .unwrap()
                .equal_up_to_phase(&input.state(), 1e-9)
                .unwrap());
        }
    }

    #[test]
    fn transported_bits_match_the_outcome_in_honest_runs() {
        for seed in 0..20u64 {
            let input = UnknownQubit::random(&mut rng(seed + 500));
            let out = run_ssqi(&base_cfg(seed), &input, &everyone(), &AttackModel::NoAttack)
                .unwrap();
            let SsqiRunOutcome::Completed {
                result,
                message_run,
            } = out
            else {
                panic!("honest run must complete");
            };
            let ProtocolOutcome::Completed { decoded_bits, .. } = message_run else {
                panic!("inner run must complete");
            };
            assert_eq!(decoded_bits, result.outcome_bits.to_vec());
        }
    }

    #[test]
    fn holder_alone_gets_a_guess_not_the_state() {
        let input = UnknownQubit::random(&mut rng(77));
        let out = run_ssqi(&base_cfg(42), &input, &[0].into(), &AttackModel::NoAttack).unwrap();
        let result = out.completed().unwrap();
        let fidelity = result.fidelity.unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&fidelity));
        assert!(result.reconstructed.is_some());
    }

    #[test]
    fn coalition_without_the_holder_reconstructs_nothing() {
        let input = UnknownQubit::random(&mut rng(78));
        let out = run_ssqi(&base_cfg(43), &input, &[1, 2].into(), &AttackModel::NoAttack)
            .unwrap();
        let result = out.completed().unwrap();
        assert_eq!(result.reconstructed, None);
        assert_eq!(result.fidelity, None);
    }

    #[test]
    fn holder_guess_averages_to_the_oracle_value() {
        let mut input_rng = rng(99);
        let mut total = 0.0;
        let trials = 400;
        for seed in 0..trials {
            let input = UnknownQubit::random(&mut input_rng);
            let out = run_ssqi(
                &ProtocolConfig::new(3, 20, seed),
                &input,
                &[0].into(),
                &AttackModel::NoAttack,
            )
            .unwrap();
            total += out.completed().unwrap().fidelity.unwrap();
        }
        let mean = total / trials as f64;
        // Per-trial variance is at most ~0.14; 3 sigma over 400 trials
        // stays within 0.06 of the 0.5 oracle value.
        let oracle = guessed_correction_mean_fidelity();
        assert!((mean - oracle).abs() < 0.06, "mean = {mean}");
    }

    #[test]
    fn pair_channel_interception_fails_the_channel_check() {
        let attack = AttackModel::InterceptResend {
            segment: pair_hop(),
            basis_strategy: BasisStrategy::UniformRandom,
        };
        let input = UnknownQubit::random(&mut rng(101));
        let cfg = ProtocolConfig::new(3, 2000, 606);
        let out = run_ssqi(&cfg, &input, &everyone(), &attack).unwrap();
        let SsqiRunOutcome::ChannelCheckFailed { mismatch_rate } = out else {
            panic!("expected the channel check to fail, got {out:?}");
        };
        // 400 sampled pairs at p = 1/4: 3 sigma is about 0.065.
        assert!((mismatch_rate - 0.25).abs() < 0.065, "rate = {mismatch_rate}");
    }

    #[test]
    fn bit_hop_interception_aborts_the_message_run() {
        // Outer hop receiver:1 -> receiver:2 is the bit run's first hop.
        let attack = AttackModel::InterceptResend {
            segment: Segment::distribution(PartyId::Receiver(1), PartyId::Receiver(2)),
            basis_strategy: BasisStrategy::UniformRandom,
        };
        let input = UnknownQubit::random(&mut rng(102));
        let cfg = ProtocolConfig::new(3, 2000, 607);
        let out = run_ssqi(&cfg, &input, &everyone(), &attack).unwrap();
        let SsqiRunOutcome::MessageRunAborted { message_run } = out else {
            panic!("expected the bit run to abort, got {out:?}");
        };
        let rate = message_run.check_error_rate();
        assert!((rate - 0.25).abs() < 0.065, "rate = {rate}");
    }

    #[test]
    fn runs_are_reproducible() {
        let input = UnknownQubit::random(&mut rng(103));
        let cfg = base_cfg(2024);
        let a = run_ssqi(&cfg, &input, &everyone(), &AttackModel::NoAttack).unwrap();
        let b = run_ssqi(&cfg, &input, &everyone(), &AttackModel::NoAttack).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn configuration_errors_are_caught_up_front() {
        let input = UnknownQubit::random(&mut rng(104));
        assert_eq!(
            run_ssqi(
                &ProtocolConfig::new(2, 100, 1),
                &input,
                &[0, 1].into(),
                &AttackModel::NoAttack
            )
            .unwrap_err(),
            SsqiError::TooFewReceivers(2)
        );
        assert_eq!(
            run_ssqi(&base_cfg(1), &input, &[5].into(), &AttackModel::NoAttack).unwrap_err(),
            SsqiError::UnknownCoalitionMember(5)
        );
        let mut cfg = base_cfg(1);
        cfg.final_holder = Some(0);
        assert_eq!(
            run_ssqi(&cfg, &input, &everyone(), &AttackModel::NoAttack).unwrap_err(),
            SsqiError::HolderIsQubitHolder
        );
        // A hop that exists in the bit protocol's own layout but not here.
        let off_layout = AttackModel::InterceptResend {
            segment: Segment::distribution(PartyId::Receiver(0), PartyId::Receiver(1)),
            basis_strategy: BasisStrategy::UniformRandom,
        };
        assert!(matches!(
            run_ssqi(&base_cfg(1), &input, &everyone(), &off_layout).unwrap_err(),
            SsqiError::Adversary(AdversaryError::InvalidSegment(_))
        ));
        let holder_taps_own_hop = AttackModel::DishonestReceiver {
            party: PartyId::Receiver(0),
            segment: pair_hop(),
        };
        assert!(matches!(
            run_ssqi(&base_cfg(1), &input, &everyone(), &holder_taps_own_hop).unwrap_err(),
            SsqiError::Adversary(AdversaryError::PartyIsEndpoint(_))
        ));
    }

    #[test]
    fn segment_layout_splices_the_two_protocols() {
        let cfg = ProtocolConfig::new(4, 100, 0);
        assert_eq!(
            ssqi_segments(&cfg),
            vec![
                Segment::distribution(PartyId::Receiver(0), PartyId::Alice),
                Segment::distribution(PartyId::Receiver(1), PartyId::Receiver(2)),
                Segment::distribution(PartyId::Receiver(2), PartyId::Receiver(3)),
                Segment::distribution(PartyId::Receiver(3), PartyId::Alice),
                Segment::return_hop(PartyId::Receiver(3)),
            ]
        );
    }
}
