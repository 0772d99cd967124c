//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the simulator can run on: `f32` or `f64`.
///
/// All tolerances quoted in the tests assume `f64`; `f32` is supported for
/// quick, low-precision exploration.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Display
    + LowerExp
    + Sum
    + Debug
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(value: f64) -> T {
    T::from_f64(value).expect("literal representable in target float")
}

#[inline]
pub fn from_usize<T: Real>(value: usize) -> T {
    T::from_usize(value).expect("index representable in target float")
}

#[inline]
pub fn to_f64<T: Real>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `e^{i phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut a = angle % two_pi;
    if a < T::zero() {
        a = a + two_pi;
    }
    if a >= two_pi {
        a = a - two_pi;
    }
    a
}

/// Signed distance between two angles, reduced to `(-π, π]`.
pub fn angle_difference<T: Real>(a: T, b: T) -> T {
    let d = wrap_angle(a - b);
    if d > T::PI() {
        d - (T::PI() + T::PI())
    } else {
        d
    }
}

/// `true` if two angles agree modulo 2π within `tol`.
pub fn same_angle<T: Real>(a: T, b: T, tol: T) -> bool {
    angle_difference(a, b).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrapping_lands_in_range() {
        assert!((wrap_angle(-0.5_f64) - (2.0 * PI - 0.5)).abs() < 1e-15);
        assert!((wrap_angle(7.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0_f64), 0.0);
    }

    #[test]
    fn difference_is_signed() {
        assert!((angle_difference(0.1_f64, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_difference(2.0 * PI - 0.1, 0.1_f64) + 0.2).abs() < 1e-12);
        assert!(same_angle(0.0_f64, 2.0 * PI, 1e-12));
    }
}
