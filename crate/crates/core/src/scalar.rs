use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the numerical core is generic over: `f32` or `f64`.
///
/// The tolerance hooks scale the fixed double-precision thresholds used
/// throughout the crate to what the type can actually resolve.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Hermiticity / unitarity tolerance (Frobenius, relative to scale).
    fn herm_tol() -> Self;
    /// Tolerance for PSD, CP and TP checks.
    fn psd_tol() -> Self;
    /// Off-diagonal convergence threshold for the Jacobi eigensolver.
    fn jacobi_eps() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn herm_tol() -> Self {
        1e-10
    }
    fn psd_tol() -> Self {
        1e-8
    }
    fn jacobi_eps() -> Self {
        1e-15
    }
}

impl Scalar for f32 {
    fn herm_tol() -> Self {
        1e-4
    }
    fn psd_tol() -> Self {
        1e-4
    }
    fn jacobi_eps() -> Self {
        1e-7
    }
}
