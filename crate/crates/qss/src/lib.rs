//! Deterministic simulator and analysis harness for single-photon
//! (n,n)-threshold quantum secret sharing.
//!
//! Alice splits a classical message among n receivers so that only all of
//! them together can read it: one receiver prepares a batch of randomly
//! polarized photons, every other receiver encrypts each photon with a
//! random unitary from {Id, Flip, Hada}, and Alice encodes her bits on the
//! returned photons (Id for 0, Flip for 1) after sacrificing a random
//! subset to detect eavesdropping. A qubit (rather than a bit string) is
//! shared by teleporting it and distributing the two-bit Bell outcome
//! through the same scheme ([`ssqi`]).
//!
//! Everything is seeded and replayable: a run is a pure function of its
//! config and master seed ([`seed`]), intercept-resend adversaries are
//! pluggable ([`adversary`]), and their exact detection statistics come
//! from exhaustive enumeration oracles rather than sampling.

pub mod adversary;
pub mod harness;
pub mod qsscm;
pub mod qstate;
pub mod scalar;
pub mod seed;
pub mod ssqi;

pub use scalar::Scalar;

/// The concrete scalar the protocol layers run on.
pub type Real = f64;

/// Complex amplitude over [`Real`].
pub type Amplitude = num_complex::Complex<Real>;

/// Protocol-grade state vector.
pub type State = qstate::PureState<Real>;

/// Protocol-grade 2x2 unitary.
pub type Unitary = qstate::Unitary2<Real>;
