use std::fmt;

use num_complex::Complex;
use rand::Rng;

use crate::scalar::Scalar;

use super::{PureState, QStateError};

/// The four Bell-measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellOutcome {
    PhiPlus,
    PsiPlus,
    PhiMinus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PsiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiMinus,
    ];

    /// Two classical bits identifying the outcome.
    pub fn bits(self) -> [bool; 2] {
        match self {
            BellOutcome::PhiPlus => [false, false],
            BellOutcome::PsiPlus => [false, true],
            BellOutcome::PhiMinus => [true, false],
            BellOutcome::PsiMinus => [true, true],
        }
    }

    pub fn from_bits(bits: [bool; 2]) -> BellOutcome {
        match bits {
            [false, false] => BellOutcome::PhiPlus,
            [false, true] => BellOutcome::PsiPlus,
            [true, false] => BellOutcome::PhiMinus,
            [true, true] => BellOutcome::PsiMinus,
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BellOutcome::PhiPlus => write!(f, "phi+"),
            BellOutcome::PsiPlus => write!(f, "psi+"),
            BellOutcome::PhiMinus => write!(f, "phi-"),
            BellOutcome::PsiMinus => write!(f, "psi-"),
        }
    }
}

/// The two-qubit Bell state associated with `outcome`.
///
/// `PhiPlus` is the pair source used by the protocol: (|HH> + |VV>)/sqrt(2),
/// which equals (|uu> + |dd>)/sqrt(2), so both halves agree in either basis.
pub fn bell_state<T: Scalar>(outcome: BellOutcome) -> PureState<T> {
    let z = Complex::new(T::zero(), T::zero());
    let c = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let amps = match outcome {
        BellOutcome::PhiPlus => vec![c, z, z, c],
        BellOutcome::PsiPlus => vec![z, c, c, z],
        BellOutcome::PhiMinus => vec![c, z, z, -c],
        BellOutcome::PsiMinus => vec![z, c, -c, z],
    };
    PureState::from_raw(2, amps)
}

/// Bell-basis measurement of the qubit pair `(pair.0, pair.1)` of a
/// three-qubit state. Returns the sampled outcome and the renormalized
/// single-qubit state left on the remaining position.
///
/// Branch probabilities are renormalized by their sum before sampling.
pub fn bell_measure<T: Scalar, R: Rng + ?Sized>(
    state: &PureState<T>,
    pair: (usize, usize),
    rng: &mut R,
) -> Result<(BellOutcome, PureState<T>), QStateError> {
    let mut branches = Vec::with_capacity(4);
    let mut total = 0.0f64;
    for outcome in BellOutcome::ALL {
        let (p, remaining) = project_pair(state, pair, outcome)?;
        total += p;
        branches.push((outcome, p, remaining));
    }
    let u: f64 = rng.gen();
    let target = u * total;
    let mut acc = 0.0f64;
    for (outcome, p, remaining) in branches {
        acc += p;
        if target < acc {
            if let Some(state) = remaining {
                return Ok((outcome, state));
            }
        }
    }
    // Unreachable for a normalized state: u < 1 guarantees target < total and
    // the winning branch has positive probability.
    Err(QStateError::ZeroProbabilityBranch)
}

/// Forces the Bell branch `outcome` on the qubit pair of a three-qubit
/// state: returns the branch probability and the renormalized remaining
/// qubit. Errors if the branch has zero probability.
pub fn bell_project<T: Scalar>(
    state: &PureState<T>,
    pair: (usize, usize),
    outcome: BellOutcome,
) -> Result<(T, PureState<T>), QStateError> {
    let (p, remaining) = project_pair(state, pair, outcome)?;
    match remaining {
        Some(state) => Ok((T::from_f64(p).expect("probability fits the scalar"), state)),
        None => Err(QStateError::ZeroProbabilityBranch),
    }
}

/// Contracts the Bell bra for `outcome` against qubits `(pair.0, pair.1)`,
/// leaving the unnormalized amplitude vector of the remaining qubit.
fn project_pair<T: Scalar>(
    state: &PureState<T>,
    pair: (usize, usize),
    outcome: BellOutcome,
) -> Result<(f64, Option<PureState<T>>), QStateError> {
    if state.num_qubits() != 3 {
        return Err(QStateError::DimensionMismatch {
            expected: 3,
            got: state.num_qubits(),
        });
    }
    let (qa, qb) = pair;
    if qa >= 3 || qb >= 3 || qa == qb {
        return Err(QStateError::QubitOutOfRange {
            qubit: qa.max(qb),
            num_qubits: 3,
        });
    }
    let rest = 3 - qa - qb;
    let bell = bell_state::<T>(outcome);
    let idx = |a: usize, b: usize, x: usize| -> usize {
        (a << (2 - qa)) | (b << (2 - qb)) | (x << (2 - rest))
    };
    let mut amps = [Complex::new(T::zero(), T::zero()); 2];
    for (x, amp) in amps.iter_mut().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                *amp = *amp + bell.amps()[a * 2 + b].conj() * state.amps()[idx(a, b, x)];
            }
        }
    }
    let prob = (amps[0].norm_sqr() + amps[1].norm_sqr())
        .to_f64()
        .unwrap_or(f64::NAN);
    if prob <= 0.0 {
        return Ok((prob.max(0.0), None));
    }
    let norm = (amps[0].norm_sqr() + amps[1].norm_sqr()).sqrt();
    let scale = Complex::new(T::one() / norm, T::zero());
    Ok((
        prob,
        Some(PureState::from_raw(1, vec![amps[0] * scale, amps[1] * scale])),
    ))
}
