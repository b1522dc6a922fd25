use std::fmt;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the analytic core is generic over: `f32` or `f64`.
///
/// The accuracy contracts quoted in the module docs assume `f64`; an `f32`
/// instantiation works but saturates around 1e-6 relative error.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lift a literal constant into the scalar type.
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Lossy view as f64, for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand used inside long formula transcriptions.
#[inline]
pub(crate) fn c<R: Real>(v: f64) -> R {
    R::cst(v)
}
