//! Scalar abstraction for the numeric kernels.
//!
//! Everything downstream (hazard curves, quadrature, uniformization, the
//! samplers) is generic over [`Real`], so the whole stack runs on `f32` or
//! `f64`. Concrete `f64` aliases live at the crate root. The subset jump-chain
//! DP is generic over a plain ring scalar instead (see `kernel::dp`), which is
//! how the exact `BigRational` mode works.

use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + AddAssign + Sum + fmt::Debug + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literals and tabulated constants.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to any Real")
    }

    /// Lossy conversion to `f64`, for reporting and binning.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + Sum
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Natural log of the gamma function, used for Poisson weights in
/// uniformization. Stirling's series with upward recurrence below 18;
/// absolute error is at the 1e-14 level for f64.
pub fn ln_gamma<R: Real>(mut x: R) -> R {
    debug_assert!(x > R::zero());
    let mut shift = R::zero();
    while x < R::of(18.0) {
        shift = shift - x.ln();
        x += R::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // Stirling: (x - 1/2) ln x - x + ln(2 pi)/2 + Σ B_2n / (2n (2n-1) x^(2n-1))
    let series = inv
        * (R::of(1.0 / 12.0)
            - inv2
                * (R::of(1.0 / 360.0)
                    - inv2 * (R::of(1.0 / 1260.0) - inv2 * (R::of(1.0 / 1680.0) - inv2 * R::of(1.0 / 1188.0)))));
    shift + (x - R::of(0.5)) * x.ln() - x + R::of(0.9189385332046727) + series
}
