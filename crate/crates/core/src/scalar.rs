//! Scalar abstraction for the numeric core.
//!
//! All probability and weight arithmetic is generic over [`Real`], a thin
//! alias over the num-traits float stack plus a uniform-variate hook for the
//! rand integration. `f64` is the default throughout the crate (see the type
//! aliases at the crate root); `f32` exists for memory-bound workloads such
//! as the bench grid, where dense kernels at n = 2^14 would otherwise not fit.

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::distr::{Distribution, StandardUniform};
use rand::RngCore;
use std::fmt::{Debug, Display};

/// Floating-point scalar usable for weights, probabilities and kernels.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Default + Debug + Display + Send + Sync + 'static
{
    /// One uniform variate in [0, 1).
    fn unit_uniform(rng: &mut dyn RngCore) -> Self;
}

impl Real for f32 {
    fn unit_uniform(rng: &mut dyn RngCore) -> Self {
        StandardUniform.sample(rng)
    }
}

impl Real for f64 {
    fn unit_uniform(rng: &mut dyn RngCore) -> Self {
        StandardUniform.sample(rng)
    }
}

/// Lossless-enough conversion from `f64` constants into the working scalar.
pub fn from_f64<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Conversion from counts and sizes into the working scalar.
pub fn from_usize<R: Real>(x: usize) -> R {
    R::from_usize(x).expect("usize representable in scalar type")
}

/// Tolerance with a floor scaled to the scalar's precision.
///
/// Defaults in this crate are stated for f64; coarser scalars (f32) would
/// reject valid inputs if the f64 constants were applied verbatim, so
/// tolerances take `max(stated, floor_ulps * epsilon)`.
pub fn tolerance<R: Real>(stated: f64, floor_ulps: f64) -> R {
    let floor = R::epsilon() * from_f64(floor_ulps);
    from_f64::<R>(stated).max(floor)
}
