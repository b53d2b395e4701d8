//! Scalar abstraction shared by the state, model and witness code.
//!
//! Everything numeric is written against [`Real`], which is satisfied by
//! `f32` and `f64`. The physics only makes sense at double precision (the
//! Liouvillian spans roughly eight decades), so the crate root re-exports
//! `f64` aliases for day-to-day use.

use nalgebra::{Complex, DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field the simulator is generic over.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

/// Square complex matrix. Dimensions used here are 2, 4, 8 and 64.
pub type ComplexMatrix<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable")
}

/// Lossy conversion used for diagnostics and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Numerical tolerances used by validity checks and identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Hermiticity, trace and positivity checks on physical states.
    pub physical: T,
    /// Pure algebraic identities (kron associativity, trace bookkeeping).
    pub algebraic: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            physical: lit(1e-10),
            algebraic: lit(1e-12),
        }
    }
}
