use std::fmt;

use num_complex::Complex;
use rand::Rng;

use crate::scalar::Scalar;

use super::{QStateError, Unitary2};

/// Measurement basis for a polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Rectilinear, Basis::Diagonal];

    /// The two labels of this basis, low bit first.
    pub fn labels(self) -> [StateLabel; 2] {
        match self {
            Basis::Rectilinear => [StateLabel::H, StateLabel::V],
            Basis::Diagonal => [StateLabel::UDiag, StateLabel::DDiag],
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::Rectilinear => Basis::Diagonal,
            Basis::Diagonal => Basis::Rectilinear,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Rectilinear => write!(f, "rectilinear"),
            Basis::Diagonal => write!(f, "diagonal"),
        }
    }
}

/// One of the four preparation/measurement labels: horizontal, vertical,
/// and the two diagonals u = (H+V)/sqrt(2), d = (H-V)/sqrt(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    H,
    V,
    UDiag,
    DDiag,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::H,
        StateLabel::V,
        StateLabel::UDiag,
        StateLabel::DDiag,
    ];

    pub fn basis(self) -> Basis {
        match self {
            StateLabel::H | StateLabel::V => Basis::Rectilinear,
            StateLabel::UDiag | StateLabel::DDiag => Basis::Diagonal,
        }
    }

    /// Classical bit this label carries within its own basis.
    pub fn bit(self) -> bool {
        matches!(self, StateLabel::V | StateLabel::DDiag)
    }

    /// The other label of the same basis.
    pub fn flipped(self) -> StateLabel {
        match self {
            StateLabel::H => StateLabel::V,
            StateLabel::V => StateLabel::H,
            StateLabel::UDiag => StateLabel::DDiag,
            StateLabel::DDiag => StateLabel::UDiag,
        }
    }

    pub fn from_basis_bit(basis: Basis, bit: bool) -> StateLabel {
        let [lo, hi] = basis.labels();
        if bit {
            hi
        } else {
            lo
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::H => write!(f, "H"),
            StateLabel::V => write!(f, "V"),
            StateLabel::UDiag => write!(f, "u"),
            StateLabel::DDiag => write!(f, "d"),
        }
    }
}

/// Dense normalized state vector over 1..=3 qubits.
///
/// Qubit 0 is the leftmost tensor factor (most significant index bit).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar> {
    num_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    /// Builds a state from amplitudes, validating dimension, finiteness and
    /// unit norm (within [`Scalar::norm_tol`]).
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self, QStateError> {
        let num_qubits = match amps.len() {
            2 => 1,
            4 => 2,
            8 => 3,
            n => return Err(QStateError::BadDimension(n)),
        };
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QStateError::NonFinite);
        }
        let state = PureState { num_qubits, amps };
        let norm = state.norm();
        if (norm - T::one()).abs() > T::norm_tol() {
            return Err(QStateError::NotNormalized(
                norm.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(state)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_raw(num_qubits: usize, amps: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        PureState { num_qubits, amps }
    }

    pub fn from_label(label: StateLabel) -> Self {
        let one = Complex::new(T::one(), T::zero());
        let zero = Complex::new(T::zero(), T::zero());
        let c = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let amps = match label {
            StateLabel::H => vec![one, zero],
            StateLabel::V => vec![zero, one],
            StateLabel::UDiag => vec![c, c],
            StateLabel::DDiag => vec![c, -c],
        };
        PureState {
            num_qubits: 1,
            amps,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    /// Applies a single-qubit unitary to a single-qubit state.
    pub fn apply(&self, u: &Unitary2<T>) -> Result<Self, QStateError> {
        if self.num_qubits != 1 {
            return Err(QStateError::DimensionMismatch {
                expected: 1,
                got: self.num_qubits,
            });
        }
        self.apply_on_qubit(u, 0)
    }

    /// Applies a single-qubit unitary to tensor factor `qubit`, identity on
    /// the rest.
    pub fn apply_on_qubit(&self, u: &Unitary2<T>, qubit: usize) -> Result<Self, QStateError> {
        if qubit >= self.num_qubits {
            return Err(QStateError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        let shift = self.num_qubits - 1 - qubit;
        let mask = 1usize << shift;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        for (i, out) in amps.iter_mut().enumerate() {
            let b = (i >> shift) & 1;
            let i0 = i & !mask;
            let i1 = i | mask;
            *out = u.entry(b, 0) * self.amps[i0] + u.entry(b, 1) * self.amps[i1];
        }
        Ok(PureState {
            num_qubits: self.num_qubits,
            amps,
        })
    }

    /// Tensor product, `self`'s qubits first.
    pub fn tensor(&self, other: &Self) -> Result<Self, QStateError> {
        let total = self.num_qubits + other.num_qubits;
        if total > 3 {
            return Err(QStateError::DimensionOverflow { total });
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(PureState {
            num_qubits: total,
            amps,
        })
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, QStateError> {
        if self.num_qubits != other.num_qubits {
            return Err(QStateError::DimensionMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            }))
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<T, QStateError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// True iff the states agree up to a global phase: `|<a|b>| >= 1 - tol`.
    pub fn equal_up_to_phase(&self, other: &Self, tol: T) -> Result<bool, QStateError> {
        Ok(self.inner(other)?.norm() >= T::one() - tol)
    }

    /// Projective measurement of a single-qubit state in `basis`.
    ///
    /// Returns the observed label and the canonical collapsed state. Born
    /// probabilities are renormalized by their sum before sampling, so an
    /// amplitude that vanishes exactly can never be selected.
    pub fn measure_in_basis<R: Rng + ?Sized>(
        &self,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(StateLabel, Self), QStateError> {
        if self.num_qubits != 1 {
            return Err(QStateError::DimensionMismatch {
                expected: 1,
                got: self.num_qubits,
            });
        }
        let [lo, hi] = basis.labels();
        let p_lo = self.label_probability(lo)?;
        let p_hi = self.label_probability(hi)?;
        let total = p_lo + p_hi;
        let u: f64 = rng.gen();
        let outcome = if u * total < p_lo { lo } else { hi };
        Ok((outcome, PureState::from_label(outcome)))
    }

    /// Probability of observing `label` when measuring a single-qubit state
    /// in that label's basis.
    pub fn label_probability(&self, label: StateLabel) -> Result<f64, QStateError> {
        if self.num_qubits != 1 {
            return Err(QStateError::DimensionMismatch {
                expected: 1,
                got: self.num_qubits,
            });
        }
        let overlap = PureState::from_label(label).inner(self)?;
        Ok(overlap.norm_sqr().to_f64().unwrap_or(f64::NAN))
    }

    /// Measures tensor factor `qubit` in `basis`, collapsing it in place.
    ///
    /// The returned state keeps the full qubit count with the measured
    /// factor replaced by the observed basis state.
    pub fn measure_qubit_in_basis<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(StateLabel, Self), QStateError> {
        if qubit >= self.num_qubits {
            return Err(QStateError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        let [lo, hi] = basis.labels();
        let (p_lo, post_lo) = self.project_label(qubit, lo);
        let (p_hi, post_hi) = self.project_label(qubit, hi);
        let total = p_lo + p_hi;
        let u: f64 = rng.gen();
        if u * total < p_lo {
            Ok((lo, post_lo.expect("positive-probability branch has a state")))
        } else {
            Ok((hi, post_hi.expect("positive-probability branch has a state")))
        }
    }

    /// Projects tensor factor `qubit` onto `label`: branch probability and
    /// the renormalized post-state (None on a zero-probability branch).
    fn project_label(&self, qubit: usize, label: StateLabel) -> (f64, Option<Self>) {
        let shift = self.num_qubits - 1 - qubit;
        let mask = 1usize << shift;
        let b = PureState::<T>::from_label(label);
        // c[rest] = <label|_qubit psi>, indexed by the full index with the
        // measured bit cleared.
        let mut amps = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        let mut prob = T::zero();
        for i0 in 0..self.amps.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let c = b.amps[0].conj() * self.amps[i0] + b.amps[1].conj() * self.amps[i1];
            prob = prob + c.norm_sqr();
            amps[i0] = b.amps[0] * c;
            amps[i1] = b.amps[1] * c;
        }
        let p = prob.to_f64().unwrap_or(f64::NAN);
        if p <= 0.0 {
            return (p.max(0.0), None);
        }
        let scale = Complex::new(T::one() / prob.sqrt(), T::zero());
        for a in &mut amps {
            *a = *a * scale;
        }
        (
            p,
            Some(PureState {
                num_qubits: self.num_qubits,
                amps,
            }),
        )
    }
}
