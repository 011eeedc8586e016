//! Scalar abstraction for the state/tomogram math.
//!
//! The geometric layers (states, quadrature forms, tomogram densities) are
//! generic over [`Real`]; the statistical and I/O layers run on `f64`.

use num_traits::{Float, NumAssign, NumCast};

/// Real scalar: `f32` or `f64`.
pub trait Real: Float + NumAssign + Copy + Send + Sync + std::fmt::Debug + 'static {
    fn from_f64(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 conversion")
    }
    fn to_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("f64 conversion")
    }
    fn half() -> Self {
        Self::from_f64(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalars that additionally support nalgebra linear algebra (eigensolves,
/// inverses). Both `f32` and `f64` qualify; the trait exists so the `Float`
/// and `RealField` method namespaces only collide where linear algebra is
/// actually used.
pub trait LinalgReal: Real + nalgebra::RealField {}

impl LinalgReal for f32 {}
impl LinalgReal for f64 {}
