//! Scalar abstraction shared by the optics, component and engine layers.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the linear-optics layers are generic over.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for closed-form algebraic identities.
    const ALGEBRA_TOL: Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const ALGEBRA_TOL: Self = 1e-12;
}

impl Scalar for f32 {
    const ALGEBRA_TOL: Self = 1e-5;
}

pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Scalar>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Scalar>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Scalar>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn ci<T: Scalar>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// e^{iθ}
#[inline]
pub fn cis<T: Scalar>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Scalar>(phi: T) -> T {
    let two_pi = T::TAU();
    let r = phi % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    // `r + 2π` can round up to exactly 2π for tiny negative inputs.
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}
