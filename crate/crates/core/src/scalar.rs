use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point type the low-level kernels are written against.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal; always succeeds for `f32` and `f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
