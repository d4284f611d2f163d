//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the measurement kernels are generic over.
///
/// Implemented for `f32` and `f64`. Pixel coordinates and counts stay integral;
/// only derived quantities (distances, slopes, calibres, statistics) use `Real`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every value used in this crate is representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub(crate) fn mean<F: Real>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<F>() / F::from_usize_lossy(values.len()))
}

/// Sample standard deviation (n - 1 denominator); `None` below two values.
pub(crate) fn sample_sd<F: Real>(values: &[F]) -> Option<F> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: F = values.iter().map(|&v| (v - m) * (v - m)).sum();
    Some((ss / F::from_usize_lossy(values.len() - 1)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sd() {
        assert_eq!(mean::<f64>(&[]), None);
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), Some(2.0));
        assert_eq!(sample_sd(&[1.0f64]), None);
        let sd = sample_sd(&[2.0f64, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((sd - 2.138_089_935_299_395).abs() < 1e-12);
        let sd32 = sample_sd(&[1.0f32, 3.0]).unwrap();
        assert!((sd32 - std::f32::consts::SQRT_2).abs() < 1e-6);
    }
}
