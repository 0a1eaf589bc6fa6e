//! Orthonormal bases and coefficient-wise soft thresholding.

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Identity,
    /// Full-depth orthonormal Haar transform; lengths must be powers of two.
    Haar,
}

impl Basis {
    fn check(self, n: usize) -> Result<()> {
        match self {
            Basis::Haar if n == 0 || !n.is_power_of_two() => Err(PcsError::NotPowerOfTwo(n)),
            _ => Ok(()),
        }
    }

    /// Analysis `Wᵀf`. Haar coefficients are laid out coarse to fine:
    /// `[scaling, detail(level 0), detail(level 1) x2, ...]`.
    pub fn forward<T: Scalar>(self, f: &[T]) -> Result<Vec<T>> {
        self.check(f.len())?;
        let mut x = f.to_vec();
        if self == Basis::Haar {
            let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
            let mut tmp = vec![T::zero(); x.len()];
            let mut len = x.len();
            while len > 1 {
                let h = len / 2;
                for i in 0..h {
                    let (a, b) = (x[2 * i], x[2 * i + 1]);
                    tmp[i] = (a + b) * r;
                    tmp[h + i] = (a - b) * r;
                }
                x[..len].copy_from_slice(&tmp[..len]);
                len = h;
            }
        }
        Ok(x)
    }

    /// Synthesis `Wθ`.
    pub fn inverse<T: Scalar>(self, theta: &[T]) -> Result<Vec<T>> {
        self.check(theta.len())?;
        let mut x = theta.to_vec();
        if self == Basis::Haar {
            let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
            let mut tmp = vec![T::zero(); x.len()];
            let mut len = 2;
            while len <= x.len() {
                let h = len / 2;
                for i in 0..h {
                    let (a, d) = (x[i], x[h + i]);
                    tmp[2 * i] = (a + d) * r;
                    tmp[2 * i + 1] = (a - d) * r;
                }
                x[..len].copy_from_slice(&tmp[..len]);
                len *= 2;
            }
        }
        Ok(x)
    }
}

/// `sign(x)·max(|x| − t, 0)`.
#[inline]
pub fn soft_threshold<T: Scalar>(x: T, t: T) -> T {
    let mag = x.abs() - t;
    if mag > T::zero() {
        mag.copysign(x)
    } else {
        T::zero()
    }
}

/// Minimizer of `‖v − u‖² + tau_eff·‖Wᵀu‖₁`: `W·soft(Wᵀv, tau_eff/2)`.
pub fn soft_threshold_basis<T: Scalar>(v: &[T], tau_eff: T, basis: Basis) -> Result<Vec<T>> {
    if !(tau_eff >= T::zero()) {
        return Err(PcsError::invalid("threshold must be nonnegative"));
    }
    let t = tau_eff / T::lit(2.0);
    let coeffs: Vec<T> = basis.forward(v)?.into_iter().map(|c| soft_threshold(c, t)).collect();
    basis.inverse(&coeffs)
}

/// `‖Wᵀf‖₁`.
pub fn l1_norm_in<T: Scalar>(f: &[T], basis: Basis) -> Result<T> {
    Ok(basis.forward(f)?.iter().map(|c| c.abs()).sum())
}
