//! Scalar abstraction for the statistics code.

use std::fmt::{Debug, Display};

/// Floating point: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts a count or metric value. Counts in this crate never exceed
    /// the exactly-representable range of `f32`/`f64` mantissas in practice.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
