//! Floating-point abstraction for the state-vector core.
//!
//! Everything in [`crate::qstate`] is generic over a real scalar so the
//! same algebra runs at f32 or f64. The protocol layers use the f64
//! aliases exported from the crate root; tolerances below are the widest
//! each type can honour.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar underlying complex amplitudes.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Tolerance for state-norm validation and phase-insensitive comparison.
    fn norm_tol() -> Self;

    /// Tolerance for unitarity validation of 2x2 matrices.
    fn unitary_tol() -> Self;
}

impl Scalar for f64 {
    fn norm_tol() -> f64 {
        1e-9
    }

    fn unitary_tol() -> f64 {
        1e-12
    }
}

impl Scalar for f32 {
    fn norm_tol() -> f32 {
        1e-4
    }

    fn unitary_tol() -> f32 {
        1e-5
    }
}
