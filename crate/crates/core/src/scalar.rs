//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Speed of light in vacuum, µm/fs.
pub const SPEED_OF_LIGHT_UM_PER_FS: f64 = 0.299_792_458;

/// Floating-point type the simulator can run on (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

/// Lossy conversion to `f64`, used for diagnostics and I/O.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn speed_of_light<T: Real>() -> T {
    lit(SPEED_OF_LIGHT_UM_PER_FS)
}

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / lit(6.0) + x2 * x2 / lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Vacuum wavelength in nm for an angular frequency in rad/fs.
#[inline]
pub fn omega_to_wavelength_nm<T: Real>(omega: T) -> T {
    T::TAU() * speed_of_light::<T>() / omega * lit(1000.0)
}

/// Angular frequency in rad/fs for a vacuum wavelength in nm.
#[inline]
pub fn wavelength_nm_to_omega<T: Real>(wavelength_nm: T) -> T {
    T::TAU() * speed_of_light::<T>() / (wavelength_nm / lit(1000.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_at_origin() {
        assert_eq!(sinc(0.0_f64), 1.0);
        let below = sinc(0.999e-4_f64);
        let above = sinc(1.001e-4_f64);
        assert!((below - above).abs() < 1e-10);
        assert!((sinc(std::f64::consts::PI)).abs() < 1e-15);
        assert!((sinc(0.5_f32) - 0.958_851_1).abs() < 1e-6);
    }

    #[test]
    fn wavelength_round_trip() {
        let w = wavelength_nm_to_omega(1064.0_f64);
        assert!((omega_to_wavelength_nm(w) - 1064.0).abs() < 1e-9);
        assert!((w - 1.770_354).abs() < 1e-5);
    }
}
