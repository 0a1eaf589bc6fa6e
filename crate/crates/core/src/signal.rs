//! Nonnegative intensity signals with known total intensity.

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

/// Relative tolerance on `Σ values = total_intensity`.
pub const INTENSITY_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T: Scalar = f64> {
    values: Vec<T>,
    total_intensity: T,
}

impl<T: Scalar> Signal<T> {
    /// Wraps nonnegative values; the total intensity is their sum.
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_nonnegative(&values)?;
        let total_intensity = values.iter().copied().sum();
        Ok(Self {
            values,
            total_intensity,
        })
    }

    /// Wraps values whose sum must match `intensity` to relative `1e-9`.
    pub fn with_intensity(values: Vec<T>, intensity: T) -> Result<Self> {
        check_nonnegative(&values)?;
        if !(intensity > T::zero()) {
            return Err(PcsError::invalid("total intensity must be positive"));
        }
        let sum: T = values.iter().copied().sum();
        if (sum - intensity).abs() > T::lit(INTENSITY_RTOL) * intensity {
            return Err(PcsError::Domain(format!(
                "signal sums to {sum}, expected {intensity}"
            )));
        }
        Ok(Self {
            values,
            total_intensity: intensity,
        })
    }

    /// Rescales nonnegative values so they sum to `intensity`.
    pub fn rescaled(values: Vec<T>, intensity: T) -> Result<Self> {
        check_nonnegative(&values)?;
        let sum: T = values.iter().copied().sum();
        if !(sum > T::zero()) {
            return Err(PcsError::Domain("cannot rescale an all-zero signal".into()));
        }
        let scale = intensity / sum;
        let values = values.into_iter().map(|v| v * scale).collect();
        Self::with_intensity(values, intensity)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn total_intensity(&self) -> T {
        self.total_intensity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_nonnegative<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
        Some(i) => Err(PcsError::Domain(format!(
            "signal entry {i} = {} is negative or not finite",
            values[i]
        ))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_mismatched() {
        assert!(Signal::new(vec![1.0, -0.1]).is_err());
        assert!(Signal::new(vec![1.0, f64::NAN]).is_err());
        assert!(Signal::with_intensity(vec![1.0, 1.0], 2.1).is_err());
        assert!(Signal::with_intensity(vec![1.0, 1.0], 2.0).is_ok());
    }

    #[test]
    fn rescale_hits_target() {
        let s = Signal::rescaled(vec![1.0f64, 3.0], 8.0).unwrap();
        assert_eq!(s.values(), &[2.0, 6.0]);
        assert_eq!(s.total_intensity(), 8.0);
        assert!(Signal::rescaled(vec![0.0f64; 3], 1.0).is_err());
    }
}
