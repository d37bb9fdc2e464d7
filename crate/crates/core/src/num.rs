use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Scalar type for the numeric kernels: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + FftNum + Debug + Default
{
    /// Converts an `f64` literal or intermediate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + FftNum + Debug + Default
{
}
