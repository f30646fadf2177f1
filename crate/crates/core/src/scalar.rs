//! Scalar abstraction: every numerical kernel in this crate is generic over
//! [`Real`], which `f32` and `f64` satisfy. Concrete `f64` aliases live at the
//! crate root.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the solver is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Sum<Self> + fmt::Display + fmt::LowerExp
{
    /// Embed an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Convert to `f64` for reporting; NaN if the cast fails.
    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + FftNum + Sum<T> + fmt::Display + fmt::LowerExp
{
}
