//! Polarization qubits, the three-operation encryption set, and Bell-pair
//! machinery.
//!
//! The protocol works with four single-photon polarization states: the
//! rectilinear pair |H>, |V> and the diagonal pair |u> = (|H>+|V>)/sqrt(2),
//! |d> = (|H>-|V>)/sqrt(2). Three unitaries act on them: the identity, a
//! flip that exchanges the two labels of *both* bases, and the Hadamard-type
//! rotation that exchanges the bases themselves. States are dense complex
//! vectors over one to three qubits; all protocol-level comparisons ignore
//! global phase.

mod bell;
mod state;
mod unitary;

pub use bell::{bell_measure, bell_project, bell_state, BellOutcome};
pub use state::{Basis, PureState, StateLabel};
pub use unitary::{Unitary2, UnitaryKind};

use thiserror::Error;

/// Failures of state construction or state/operator plumbing.
///
/// Numeric payloads are reported as f64 regardless of the scalar in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("amplitude vector of length {0} is not a 1-, 2- or 3-qubit state")]
    BadDimension(usize),
    #[error("state norm {0} differs from 1 beyond tolerance")]
    NotNormalized(f64),
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("matrix is not unitary (max deviation {0})")]
    NotUnitary(f64),
    #[error("operation expects a {expected}-qubit state, got {got} qubits")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("tensor product would exceed the 3-qubit ceiling ({total} qubits)")]
    DimensionOverflow { total: usize },
    #[error("requested measurement branch has zero probability")]
    ZeroProbabilityBranch,
}
