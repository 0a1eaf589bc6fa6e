//! Uniform coefficient quantization and the prefix-code penalty over it.
//!
//! Each kept coefficient is mapped to one of `B = ⌈√m⌉` equal bins over
//! `[−I, I]`. A codeword lists the number of kept coefficients, their
//! locations and their bins, which costs
//! `log₂(m+1) + (3/2)·k·log₂(m)` bits.

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCoeffs<T: Scalar = f64> {
    pub m: usize,
    /// `(index, bin)` for every kept coefficient, ascending by index.
    pub nonzeros: Vec<(usize, usize)>,
    pub intensity_scale: T,
}

/// Number of bins for length `m`: `⌈√m⌉`.
pub fn bin_count(m: usize) -> usize {
    let mut b = (m as f64).sqrt().floor() as usize;
    while b * b < m {
        b += 1;
    }
    while b > 1 && (b - 1) * (b - 1) >= m {
        b -= 1;
    }
    b.max(1)
}

impl<T: Scalar> QuantizedCoeffs<T> {
    pub fn bins(&self) -> usize {
        bin_count(self.m)
    }

    pub fn bin_width(&self) -> T {
        T::lit(2.0) * self.intensity_scale / T::from_count(self.bins())
    }

    /// Center of bin `b`: `−I + (b + ½)·width`.
    pub fn bin_center(&self, b: usize) -> T {
        -self.intensity_scale + (T::from_count(b) + T::lit(0.5)) * self.bin_width()
    }

    pub fn sparsity(&self) -> usize {
        self.nonzeros.len()
    }
}

/// Quantizes every nonzero coefficient to its nearest bin center. Exact
/// zeros are left out of the support.
pub fn quantize_coeffs<T: Scalar>(theta: &[T], intensity: T) -> Result<QuantizedCoeffs<T>> {
    if !(intensity > T::zero()) {
        return Err(PcsError::invalid("intensity must be positive"));
    }
    let m = theta.len();
    let bins = bin_count(m);
    let width = T::lit(2.0) * intensity / T::from_count(bins);
    let mut nonzeros = Vec::new();
    for (i, &t) in theta.iter().enumerate() {
        if !(t.abs() <= intensity) {
            return Err(PcsError::invalid(format!(
                "coefficient {i} = {t} outside [-{intensity}, {intensity}]"
            )));
        }
        if t != T::zero() {
            let b = ((t + intensity) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
            nonzeros.push((i, b));
        }
    }
    Ok(QuantizedCoeffs {
        m,
        nonzeros,
        intensity_scale: intensity,
    })
}

pub fn dequantize<T: Scalar>(q: &QuantizedCoeffs<T>) -> Vec<T> {
    let mut out = vec![T::zero(); q.m];
    for &(i, b) in &q.nonzeros {
        out[i] = q.bin_center(b);
    }
    out
}

/// Codelength in bits: `log₂(m+1) + 1.5·k·log₂(m)`. Multiply by `ln 2`
/// for the natural-log form.
pub fn codelength_penalty<T: Scalar>(q: &QuantizedCoeffs<T>) -> f64 {
    let m = q.m as f64;
    (m + 1.0).log2() + 1.5 * q.sparsity() as f64 * m.log2()
}

/// `Σ 2^(−pen)` over every codeword for length `m`: each support subset
/// and each assignment of bins to the support. Exponential in `m`.
pub fn kraft_sum_exhaustive(m: usize) -> f64 {
    assert!(m <= 16, "exhaustive enumeration is only feasible for tiny m");
    let bins = bin_count(m);
    let mut total = 0.0;
    for support in 0u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| support & (1 << i) != 0).collect();
        let k = idx.len();
        let mut assignment = vec![0usize; k];
        loop {
            let q = QuantizedCoeffs::<f64> {
                m,
                nonzeros: idx.iter().copied().zip(assignment.iter().copied()).collect(),
                intensity_scale: 1.0,
            };
            total += (-codelength_penalty(&q)).exp2();
            // odometer over bins^k
            let mut pos = 0;
            loop {
                if pos == k {
                    break;
                }
                assignment[pos] += 1;
                if assignment[pos] < bins {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_counts() {
        assert_eq!(bin_count(1), 1);
        assert_eq!(bin_count(4), 2);
        assert_eq!(bin_count(5), 3);
        assert_eq!(bin_count(16), 4);
        assert_eq!(bin_count(1024), 32);
        assert_eq!(bin_count(1025), 33);
    }

    #[test]
    fn hand_quantization() {
        let mut theta = vec![0.0; 16];
        theta[1] = 0.9;
        let q = quantize_coeffs(&theta, 1.0).unwrap();
        assert_eq!(q.nonzeros, vec![(1, 3)]);
        let centers: Vec<f64> = (0..4).map(|b| q.bin_center(b)).collect();
        assert_eq!(centers, vec![-0.75, -0.25, 0.25, 0.75]);
        let back = dequantize(&q);
        assert_eq!(back[1], 0.75);
        assert!(((back[1] - 0.9) as f64).abs() <= 0.25);
    }

    #[test]
    fn zero_vector_quantizes_exactly() {
        let q = quantize_coeffs(&[0.0; 9], 2.0).unwrap();
        assert_eq!(q.sparsity(), 0);
        assert!(dequantize(&q).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn endpoints_and_out_of_range() {
        let q = quantize_coeffs(&[1.0, -1.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(q.nonzeros, vec![(0, 1), (1, 0)]);
        assert!(quantize_coeffs(&[1.5, 0.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn codelength_hand_values() {
        let q = QuantizedCoeffs::<f64> { m: 1023, nonzeros: vec![], intensity_scale: 1.0 };
        assert!((codelength_penalty(&q) - 10.0).abs() < 1e-12);
        let q = QuantizedCoeffs::<f64> { m: 16, nonzeros: vec![(0, 1), (5, 2)], intensity_scale: 1.0 };
        assert!((codelength_penalty(&q) - (17f64.log2() + 12.0)).abs() < 1e-12);
        assert!((codelength_penalty(&q) - 16.0875).abs() < 1e-4);
    }
}
