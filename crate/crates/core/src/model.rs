//! Poisson forward model: sampling, likelihood, gradient and divergences.
//!
//! Observations enter the likelihood functions as scalars (`&[T]`) so that
//! real-valued pseudo-counts can be used in checks; [`CountVector::to_real`]
//! converts sampled counts.

use rand::Rng;

use crate::error::{check_len, PcsError, Result};
use crate::rng::{substream, Domain};
use crate::scalar::Scalar;
use crate::sensing::SensingMatrix;

/// Photon counts, one per detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector(pub Vec<u64>);

impl CountVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of detected photons.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn to_real<T: Scalar>(&self) -> Vec<T> {
        self.0.iter().map(|&c| T::from_u64(c).expect("count fits scalar")).collect()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// Lower clamp applied to intensities inside `log`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogFloor {
    /// No floor; a positive count at zero intensity is a domain error.
    None,
    Absolute(f64),
    /// `1e-10 · I / N` for known total intensity `I` and `N` detectors.
    Relative { intensity: f64, n_rows: usize },
}

impl Default for LogFloor {
    fn default() -> Self {
        LogFloor::Absolute(1e-30)
    }
}

impl LogFloor {
    pub fn epsilon(self) -> f64 {
        match self {
            LogFloor::None => 0.0,
            LogFloor::Absolute(eps) => eps,
            LogFloor::Relative { intensity, n_rows } => 1e-10 * intensity / n_rows as f64,
        }
    }
}

/// Draws `y_i ~ Poisson(mu_i)` independently, component `i` from its own
/// substream so the result depends only on `(mu, seed)`.
pub fn sample_poisson(mu: &[f64], seed: u64) -> Result<CountVector> {
    if let Some(i) = mu.iter().position(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(PcsError::Domain(format!("intensity {i} = {} is negative or not finite", mu[i])));
    }
    Ok(CountVector(
        mu.iter()
            .enumerate()
            .map(|(i, &m)| poisson_draw(&mut substream(seed, Domain::Poisson, i as u64), m))
            .collect(),
    ))
}

/// One Poisson variate: sequential-search inversion below mean 10, PTRS
/// transformed rejection (Hörmann 1993) above.
pub fn poisson_draw<R: Rng>(rng: &mut R, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    if mu < 10.0 {
        let u: f64 = rng.gen();
        let mut k = 0u64;
        let mut pk = (-mu).exp();
        let mut cdf = pk;
        while u > cdf {
            k += 1;
            pk *= mu / k as f64;
            cdf += pk;
            // cdf can stall just below 1 in floating point
            if pk < 1e-300 && k as f64 > mu {
                break;
            }
        }
        return k;
    }

    let smu = mu.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mu = mu.ln();
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mu + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mu + k * log_mu - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `ln(k!)`: exact summation below 32, Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 32 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

fn check_observations<T: Scalar>(y: &[T]) -> Result<()> {
    match y.iter().position(|v| !(*v >= T::zero())) {
        Some(i) => Err(PcsError::Domain(format!("observation {i} is negative"))),
        None => Ok(()),
    }
}

/// `Σ_j mu_j − y_j·log(max(mu_j, ε))`; the `log y_j!` constants are omitted.
pub fn neg_log_likelihood<T: Scalar>(y: &[T], mu: &[T], floor: LogFloor) -> Result<T> {
    check_len(y.len(), mu.len())?;
    check_observations(y)?;
    let eps = T::lit(floor.epsilon());
    let mut total = T::zero();
    for (j, (&yj, &mj)) in y.iter().zip(mu).enumerate() {
        if mj < T::zero() {
            return Err(PcsError::Domain(format!("intensity {j} = {mj} is negative")));
        }
        total += mj;
        if yj > T::zero() {
            let m = mj.max(eps);
            if m <= T::zero() {
                return Err(PcsError::Domain(format!(
                    "count {j} = {yj} observed at zero intensity"
                )));
            }
            total -= yj * m.ln();
        }
    }
    Ok(total)
}

/// `1 − y ⊘ max(mu, ε)`, the per-detector factor of the gradient.
pub fn gradient_weights<T: Scalar>(y: &[T], mu: &[T], floor: LogFloor) -> Result<Vec<T>> {
    check_len(y.len(), mu.len())?;
    let eps = T::lit(floor.epsilon());
    y.iter()
        .zip(mu)
        .enumerate()
        .map(|(j, (&yj, &mj))| {
            if yj > T::zero() {
                let m = mj.max(eps);
                if m <= T::zero() {
                    return Err(PcsError::Domain(format!(
                        "count {j} = {yj} observed at zero intensity"
                    )));
                }
                Ok(T::one() - yj / m)
            } else {
                Ok(T::one())
            }
        })
        .collect()
}

/// Gradient of the negative log-likelihood in the signal: `Aᵀ(1 − y ⊘ Af)`.
pub fn nll_gradient<T: Scalar>(
    y: &[T],
    f: &[T],
    matrix: &SensingMatrix,
    floor: LogFloor,
) -> Result<Vec<T>> {
    check_len(matrix.n_rows(), y.len())?;
    check_observations(y)?;
    let mu = matrix.apply(f)?;
    let w = gradient_weights(y, &mu, floor)?;
    matrix.apply_adjoint(&w)
}

/// Poisson KL divergence `Σ g log(g/h) − g + h`, with `0·log 0 = 0`.
pub fn kl_divergence<T: Scalar>(g: &[T], h: &[T]) -> Result<T> {
    check_len(g.len(), h.len())?;
    let mut total = T::zero();
    for (i, (&gi, &hi)) in g.iter().zip(h).enumerate() {
        if gi < T::zero() || hi < T::zero() {
            return Err(PcsError::Domain(format!("intensity {i} is negative")));
        }
        if gi > T::zero() {
            if hi <= T::zero() {
                return Err(PcsError::Domain(format!(
                    "g_{i} = {gi} > 0 where h_{i} = 0"
                )));
            }
            total += gi * (gi / hi).ln() - gi + hi;
        } else {
            total += hi;
        }
    }
    Ok(total)
}

/// `Σ (√g_i − √h_i)²`, equal to `−2·log` of the Poisson Hellinger affinity.
pub fn hellinger_distance_sq<T: Scalar>(g: &[T], h: &[T]) -> Result<T> {
    check_len(g.len(), h.len())?;
    if g.iter().chain(h).any(|v| *v < T::zero()) {
        return Err(PcsError::Domain("negative intensity".into()));
    }
    Ok(g.iter()
        .zip(h)
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum())
}

/// `∫√(p(y|g)p(y|h)) dν(y) = exp(−½ Σ(√g − √h)²)`.
pub fn hellinger_affinity<T: Scalar>(g: &[T], h: &[T]) -> Result<T> {
    Ok((-hellinger_distance_sq(g, h)? / T::lit(2.0)).exp())
}
