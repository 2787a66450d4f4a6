//! Floating-point scalar abstraction.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` and `f64` both
//! qualify); the exact modules work with arbitrary-precision rationals and
//! never pass through this trait.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Injects an `f64` constant (tolerances, π multiples) into `Self`.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    fn pi() -> Self {
        Self::c(std::f64::consts::PI)
    }

    /// 4π², the conversion factor between squared dual-lattice norms and
    /// flat-torus Laplace eigenvalues.
    fn four_pi_sq() -> Self {
        let pi = Self::pi();
        Self::c(4.0) * pi * pi
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}
