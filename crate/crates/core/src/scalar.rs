//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All kernels, integrators and estimators are written against [`Real`], so
//! the same code runs in `f32` for quick previews and in `f64` for the
//! accuracy-critical paths. The tolerances quoted throughout the crate assume
//! `f64`.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst};

/// Floating point type usable by the channel routines.
pub trait Real:
    Float + FloatConst + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    /// Converts an integer count into this type.
    #[inline]
    fn from_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
