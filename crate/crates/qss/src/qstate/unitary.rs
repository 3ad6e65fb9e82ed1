use std::fmt;
use std::ops::Mul;

use num_complex::Complex;

use crate::scalar::Scalar;

use super::QStateError;

/// The named 2x2 unitaries the protocol draws from.
///
/// `Id`, `Flip` and `Hada` form the encryption set: `Flip` exchanges the two
/// labels of both bases (H <-> V and u <-> d, up to sign) and `Hada`
/// exchanges the bases themselves. `Corr1`..`Corr3` are the teleportation
/// corrections for the three non-trivial Bell outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitaryKind {
    Id,
    Flip,
    Hada,
    Corr1,
    Corr2,
    Corr3,
}

impl UnitaryKind {
    /// The three operations receivers encrypt with.
    pub const ENCRYPTION_SET: [UnitaryKind; 3] =
        [UnitaryKind::Id, UnitaryKind::Flip, UnitaryKind::Hada];
}

impl fmt::Display for UnitaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitaryKind::Id => write!(f, "Id"),
            UnitaryKind::Flip => write!(f, "Flip"),
            UnitaryKind::Hada => write!(f, "Hada"),
            UnitaryKind::Corr1 => write!(f, "Corr1"),
            UnitaryKind::Corr2 => write!(f, "Corr2"),
            UnitaryKind::Corr3 => write!(f, "Corr3"),
        }
    }
}

/// A 2x2 unitary matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2<T: Scalar> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> Unitary2<T> {
    /// Validates unitarity within [`Scalar::unitary_tol`]: `U U+ = I`.
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Result<Self, QStateError> {
        let u = Unitary2 { m };
        let prod = u.compose(&u.adjoint());
        let mut dev = T::zero();
        for (i, row) in prod.m.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                let d = (*entry - Complex::new(target, T::zero())).norm();
                if d > dev {
                    dev = d;
                }
            }
        }
        if dev > T::unitary_tol() {
            return Err(QStateError::NotUnitary(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(u)
    }

    pub fn from_kind(kind: UnitaryKind) -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        let c = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let m = match kind {
            // |H><H| + |V><V|
            UnitaryKind::Id => [[o, z], [z, o]],
            // |H><V| - |V><H|: H -> -V, V -> H, u -> d, d -> -u
            UnitaryKind::Flip => [[z, o], [-o, z]],
            // (|H><H| + |H><V| + |V><H| - |V><V|)/sqrt(2): swaps the bases
            UnitaryKind::Hada => [[c, c], [c, -c]],
            // |H><V| + |V><H|
            UnitaryKind::Corr1 => [[z, o], [o, z]],
            // |H><H| - |V><V|
            UnitaryKind::Corr2 => [[o, z], [z, -o]],
            // |H><V| - |V><H|
            UnitaryKind::Corr3 => [[z, o], [-o, z]],
        };
        Unitary2 { m }
    }

    pub fn identity() -> Self {
        Unitary2::from_kind(UnitaryKind::Id)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Unitary2 {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut m = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Unitary2 { m }
    }

    pub fn scaled(&self, factor: T) -> Self {
        let f = Complex::new(factor, T::zero());
        Unitary2 {
            m: [
                [self.m[0][0] * f, self.m[0][1] * f],
                [self.m[1][0] * f, self.m[1][1] * f],
            ],
        }
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut dev = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let d = (self.m[i][j] - other.m[i][j]).norm();
                if d > dev {
                    dev = d;
                }
            }
        }
        dev
    }
}

impl<T: Scalar> Mul for Unitary2<T> {
    type Output = Unitary2<T>;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;

    use super::*;
    use crate::qstate::{PureState, StateLabel};

    type U = Unitary2<f64>;
    type S = PureState<f64>;

    const ALL_KINDS: [UnitaryKind; 6] = [
        UnitaryKind::Id,
        UnitaryKind::Flip,
        UnitaryKind::Hada,
        UnitaryKind::Corr1,
        UnitaryKind::Corr2,
        UnitaryKind::Corr3,
    ];

    #[test]
    fn named_matrices_are_unitary() {
        for kind in ALL_KINDS {
            let u = U::from_kind(kind);
            let dev = (u.compose(&u.adjoint())).max_abs_diff(&U::identity());
            assert!(dev <= 1e-12, "{kind}: deviation {dev}");
        }
    }

    #[test]
    fn new_rejects_non_unitary_matrices() {
        let o = Complex::new(1.0, 0.0);
        let z = Complex::new(0.0, 0.0);
        assert!(U::new([[o, z], [z, o]]).is_ok());
        assert!(matches!(
            U::new([[o, o], [z, o]]),
            Err(crate::qstate::QStateError::NotUnitary(_))
        ));
    }

    #[test]
    fn flip_acts_on_both_bases_with_documented_signs() {
        let flip = U::from_kind(UnitaryKind::Flip);
        let cases = [
            (StateLabel::H, StateLabel::V, -1.0),
            (StateLabel::V, StateLabel::H, 1.0),
            (StateLabel::UDiag, StateLabel::DDiag, 1.0),
            (StateLabel::DDiag, StateLabel::UDiag, -1.0),
        ];
        for (from, to, sign) in cases {
            let got = S::from_label(from).apply(&flip).unwrap();
            let want = S::from_label(to);
            for (g, w) in got.amps().iter().zip(want.amps()) {
                assert_eq!(*g, w * Complex::new(sign, 0.0), "{from} -> {to}");
            }
        }
    }

    #[test]
    fn hada_exchanges_the_bases_exactly() {
        let hada = U::from_kind(UnitaryKind::Hada);
        let cases = [
            (StateLabel::H, StateLabel::UDiag),
            (StateLabel::V, StateLabel::DDiag),
            (StateLabel::UDiag, StateLabel::H),
            (StateLabel::DDiag, StateLabel::V),
        ];
        for (from, to) in cases {
            let got = S::from_label(from).apply(&hada).unwrap();
            // Entrywise with sign: the mapping carries no phase. Magnitudes
            // round at ~1e-16 (terms like 2*(1/sqrt(2))^2), signs are exact.
            for (g, w) in got.amps().iter().zip(S::from_label(to).amps()) {
                assert!((g - w).norm() <= 1e-12, "{from} -> {to}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn flip_squares_to_minus_identity() {
        let flip = U::from_kind(UnitaryKind::Flip);
        let minus_id = U::identity().scaled(-1.0);
        assert_eq!((flip * flip).max_abs_diff(&minus_id), 0.0);
    }

    #[test]
    fn flip_and_hada_anticommute() {
        let flip = U::from_kind(UnitaryKind::Flip);
        let hada = U::from_kind(UnitaryKind::Hada);
        let lhs = flip * hada;
        let rhs = (hada * flip).scaled(-1.0);
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn adjoint_inverts_every_named_unitary() {
        for kind in ALL_KINDS {
            let u = U::from_kind(kind);
            let dev = (u.adjoint() * u).max_abs_diff(&U::identity());
            assert!(dev <= 1e-12, "{kind}: deviation {dev}");
        }
    }
}
