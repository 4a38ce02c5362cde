use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the channel and LLR code.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute slack used for normalization and pairing checks.
    fn tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl Real for f32 {
    fn tolerance() -> Self {
        64.0 * f32::EPSILON
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-12
    }
}
