//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra as na;
use num_complex::Complex;
use num_traits as nt;

/// Real floating-point scalar the physics core is written against (`f32` or `f64`).
///
/// Tolerances throughout the crate are tuned for `f64`; `f32` builds run but
/// will not meet the documented residual bounds.
pub trait Float:
    na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + nt::FloatConst + Send + Sync + 'static
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Float>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Lossy conversion back to `f64`, used for diagnostics and error payloads.
#[inline]
pub fn to_f64<T: Float>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// |z|, without requiring `num_traits::Float` on the scalar.
#[inline]
pub fn modulus<T: Float>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Principal logarithm.
#[inline]
pub fn cln<T: Float>(z: Complex<T>) -> Complex<T> {
    Complex::new(modulus(z).ln(), z.im.atan2(z.re))
}

#[inline]
pub fn cexp<T: Float>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}
