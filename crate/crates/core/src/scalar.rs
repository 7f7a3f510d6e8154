//! Scalar abstraction for the real-valued parts of the scheduler.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("finite literal fits every float type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
