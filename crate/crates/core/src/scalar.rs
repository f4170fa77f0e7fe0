//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use ndarray::LinalgScalar;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar usable by the solver: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + LinalgScalar
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; always succeeds for finite input.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex value over a [`Real`] scalar.
pub type C<T> = Complex<T>;

pub(crate) fn c64_to<T: Real>(z: Complex<f64>) -> C<T> {
    C::new(T::of(z.re), T::of(z.im))
}

/// `Σ conj(a)·b` accumulated in index order.
pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(C::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Squared Euclidean norm, accumulated in index order.
pub fn norm_sqr<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}
