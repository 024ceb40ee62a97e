//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;

/// Real scalar the model is evaluated in. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Machine-independent literal conversion.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Uniform draw on the half-open interval (0, 1].
    fn sample_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn sample_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        1.0 - rng.gen::<f64>()
    }
}

impl Scalar for f32 {
    fn sample_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        1.0 - rng.gen::<f32>()
    }
}
