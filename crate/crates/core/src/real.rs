//! Scalar abstraction: the whole numerical core is generic over `Real`,
//! instantiated at `f32` or `f64` (the CLI and scenario layer use `f64`).

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the core math runs on.
pub trait Real:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Widen to `f64` for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
