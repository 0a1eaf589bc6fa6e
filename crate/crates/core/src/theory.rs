//! Evaluators for the risk-bound quantities, compressible test signals and
//! Monte-Carlo checks of the near-isometry of the implied zero-mean matrix
//! `Ã = Z/√N`.
//!
//! The absolute constants `c₂` and `c₄` have no known numeric values; they
//! are inputs and every report carries them. `c₁`, `c₃` and the probability
//! constant `K` only appear in the caveat text.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{PcsError, Result};
use crate::penalties::projection::project_onto_c;
use crate::penalties::wavelet::Basis;
use crate::rng::{substream, Domain};
use crate::scalar::Scalar;
use crate::sensing::SensingMatrix;
use crate::signal::Signal;

/// Caveat attached to every bound report.
pub const CONSTANTS_CAVEAT: &str = "c2 and c4 are user-supplied absolute constants; the bound holds \
with probability at least 1 - m*exp(-K N) where K = K(c1, c3, p) is unspecified";

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(PcsError::invalid(format!("p = {p} outside (0, 1)")))
    }
}

/// Subgaussianity constant: `√(3/(2p(1−p)))` for `p ≠ ½` and exactly `1`
/// at `p = ½`. The jump at `½` is intentional.
pub fn zeta(p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 0.5 {
        Ok(1.0)
    } else {
        Ok((3.0 / (2.0 * p * (1.0 - p))).sqrt())
    }
}

/// `C_{N,p} = max(24/c, 16/(p(1−p)))·N`.
pub fn c_np(n: usize, p: f64, c: f64) -> Result<f64> {
    check_p(p)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(PcsError::invalid(format!("c = {c} outside (0, 1)")));
    }
    Ok((24.0 / c).max(16.0 / (p * (1.0 - p))) * n as f64)
}

/// Largest admissible sparsity `k_*(N) = N/(2c₄ζ_p⁴ log₂ m)`.
pub fn k_star(n: usize, m: usize, p: f64, c4: f64) -> Result<f64> {
    if m < 2 {
        return Err(PcsError::invalid("k_* needs m >= 2"));
    }
    if !(c4 > 0.0) {
        return Err(PcsError::invalid("c4 must be positive"));
    }
    let z = zeta(p)?;
    Ok(n as f64 / (2.0 * c4 * z.powi(4) * (m as f64).log2()))
}

/// `2c₂²ζ⁴·log(c₂ζ⁴m/N)/N`, the additive term of the oracle inequality.
pub fn additive_term(n: usize, m: usize, p: f64, c2: f64) -> Result<f64> {
    let z4 = zeta(p)?.powi(4);
    let nf = n as f64;
    Ok(2.0 * c2 * c2 * z4 * (c2 * z4 * m as f64 / nf).ln() / nf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub intensity: f64,
    /// Compressibility exponent `α = 1/q − 1/2`.
    pub alpha: f64,
    /// Weak-ℓq radius multiplier.
    pub rho: f64,
    /// Positivity constant, `0 < c < 1`.
    pub c: f64,
    pub c2: f64,
    pub c4: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            m: 1024,
            n: 512,
            p: 0.5,
            intensity: 8.2e5,
            alpha: 1.0,
            rho: 1.0,
            c: 0.1,
            c2: 1.0,
            c4: 1.0,
        }
    }
}

impl BoundParams {
    fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n == 0 {
            return Err(PcsError::invalid("need m >= 2 and N >= 1"));
        }
        if !(self.alpha > 0.0 && self.rho > 0.0 && self.intensity > 0.0) {
            return Err(PcsError::invalid("alpha, rho and intensity must be positive"));
        }
        if !(self.c2 > 0.0) {
            return Err(PcsError::invalid("c2 must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub k: usize,
    /// `k^{−2α}`
    pub approximation: f64,
    /// `k/m`
    pub quantization: f64,
    /// `k·log₂m/I`
    pub coding: f64,
}

impl BoundTerm {
    pub fn bracket(&self) -> f64 {
        self.approximation + self.quantization + self.coding
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityRegime {
    /// `I ≤ m·log m`
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub params: BoundParams,
    pub zeta_p: f64,
    pub c_np: f64,
    pub k_star: f64,
    pub terms: Vec<BoundTerm>,
    /// `(argmin k, min bracket)`; `None` when `k_* < 1`.
    pub minimum: Option<(usize, f64)>,
    /// `C_{N,p} × min bracket`.
    pub leading: Option<f64>,
    pub additive: f64,
    pub regime: IntensityRegime,
    /// Too few measurements for the bound's optimal sparsity level.
    pub saturated: bool,
}

impl BoundReport {
    pub fn total(&self) -> Option<f64> {
        self.leading.map(|l| l + self.additive)
    }

    /// CSV of the per-k terms: `k,approximation,quantization,coding,bracket`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,approximation,quantization,coding,bracket\n");
        for t in &self.terms {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                t.k,
                t.approximation,
                t.quantization,
                t.coding,
                t.bracket()
            ));
        }
        s
    }
}

/// Tabulates `k^{−2α} + k/m + k·log₂m/I` for `k = 1..⌊k_*⌋`.
pub fn evaluate_bound(params: &BoundParams) -> Result<BoundReport> {
    params.validate()?;
    let z = zeta(params.p)?;
    let cnp = c_np(params.n, params.p, params.c)?;
    let ks = k_star(params.n, params.m, params.p, params.c4)?;
    let log2m = (params.m as f64).log2();
    let k_max = (ks.floor() as usize).min(params.m);
    let terms: Vec<BoundTerm> = (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            BoundTerm {
                k,
                approximation: kf.powf(-2.0 * params.alpha),
                quantization: kf / params.m as f64,
                coding: kf * log2m / params.intensity,
            }
        })
        .collect();
    let minimum = terms.iter().fold(None, |best: Option<(usize, f64)>, t| {
        let b = t.bracket();
        match best {
            Some((_, v)) if v <= b => best,
            _ => Some((t.k, b)),
        }
    });
    let m = params.m as f64;
    let regime = if params.intensity <= m * m.ln() {
        IntensityRegime::Low
    } else {
        IntensityRegime::High
    };
    // Sparsity level balancing the approximation and noise terms.
    let balance = match regime {
        IntensityRegime::Low => (params.alpha * params.intensity / log2m).powf(1.0 / (2.0 * params.alpha + 1.0)),
        IntensityRegime::High => (params.alpha * m).powf(1.0 / (2.0 * params.alpha + 1.0)),
    };
    Ok(BoundReport {
        params: params.clone(),
        zeta_p: z,
        c_np: cnp,
        k_star: ks,
        leading: minimum.map(|(_, v)| cnp * v),
        minimum,
        additive: additive_term(params.n, params.m, params.p, params.c2)?,
        regime,
        saturated: ks < 1.0 || ks < balance,
        terms,
    })
}

/// A signal drawn from a weak-ℓq ball together with its coefficients before
/// the projection onto the positivity set.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressibleSignal {
    pub signal: Signal,
    pub coefficients: Vec<f64>,
}

/// Coefficients with `|θ_(j)| = ρI·j^{−1/q}`, `1/q = α + ½`, random signs and
/// positions; synthesized in `basis` and projected onto
/// `{f ⪰ cI, Σf = I}`.
pub fn generate_compressible_signal(
    m: usize,
    alpha: f64,
    rho: f64,
    intensity: f64,
    c: f64,
    basis: Basis,
    seed: u64,
) -> Result<CompressibleSignal> {
    if m == 0 {
        return Err(PcsError::invalid("signal length must be positive"));
    }
    if !(c >= 0.0 && c * (m as f64) < 1.0) {
        return Err(PcsError::EmptyConstraintSet(format!("c*m = {} >= 1", c * m as f64)));
    }
    if !(alpha >= 0.0 && rho > 0.0 && intensity > 0.0) {
        return Err(PcsError::invalid("need alpha >= 0, rho > 0, intensity > 0"));
    }
    let inv_q = alpha + 0.5;
    let mut rng = substream(seed, Domain::Signal, 0);
    let mut positions: Vec<usize> = (0..m).collect();
    positions.shuffle(&mut rng);
    let mut theta = vec![0.0; m];
    for (rank, &pos) in positions.iter().enumerate() {
        let mag = rho * intensity * ((rank + 1) as f64).powf(-inv_q);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        theta[pos] = sign * mag;
    }
    let f = basis.inverse(&theta)?;
    let projected = project_onto_c(&f, intensity, c)?;
    // The projection may leave values a rounding error below the floor.
    let projected = projected.into_iter().map(|v| v.max(0.0)).collect();
    Ok(CompressibleSignal {
        signal: Signal::with_intensity(projected, intensity)?,
        coefficients: theta,
    })
}

/// `‖θ − θ^{(k)}‖²/I²` for the best `k`-term approximation (largest
/// magnitudes kept, ties to the lower index).
pub fn best_k_term_error<T: Scalar>(theta: &[T], k: usize, intensity: T) -> Result<T> {
    if k > theta.len() {
        return Err(PcsError::invalid(format!("k = {k} exceeds length {}", theta.len())));
    }
    if !(intensity > T::zero()) {
        return Err(PcsError::invalid("intensity must be positive"));
    }
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        theta[b]
            .abs()
            .partial_cmp(&theta[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let tail: T = order[k..].iter().map(|&i| theta[i] * theta[i]).sum();
    Ok(tail / (intensity * intensity))
}

/// `Ãu = √(N/(p(1−p)))·(Au − (1−p)/N·Σu)`, computed from the stored
/// pattern without forming `Ã`.
pub fn apply_normalized(matrix: &SensingMatrix, u: &[f64]) -> Result<Vec<f64>> {
    let p = matrix.p();
    check_p(p)?;
    let n = matrix.n_rows() as f64;
    let au = matrix.apply(u)?;
    let offset = (1.0 - p) / n * u.iter().sum::<f64>();
    let scale = (n / (p * (1.0 - p))).sqrt();
    Ok(au.into_iter().map(|v| scale * (v - offset)).collect())
}

fn unit_l2<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        // Box–Muller normals, normalized.
        let mut u: Vec<f64> = (0..m)
            .map(|_| {
                let a: f64 = 1.0 - rng.gen::<f64>();
                let b: f64 = rng.gen();
                (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
            })
            .collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            u.iter_mut().for_each(|x| *x /= norm);
            return u;
        }
    }
}

fn unit_l1<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = (0..m)
            .map(|_| {
                let e = -(1.0 - rng.gen::<f64>()).ln();
                if rng.gen::<bool>() {
                    e
                } else {
                    -e
                }
            })
            .collect();
        let norm: f64 = u.iter().map(|x| x.abs()).sum();
        if norm > 0.0 {
            u.iter_mut().for_each(|x| *x /= norm);
            return u;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryReport {
    pub samples: usize,
    /// Fraction of sampled unit vectors with `½ ≤ ‖Ãu‖² ≤ 3/2`.
    pub fraction_in_band: f64,
    pub mean_norm_sq: f64,
    pub min_norm_sq: f64,
    pub max_norm_sq: f64,
}

/// Samples `n_vectors` uniform unit vectors and measures `‖Ãu‖²`.
pub fn empirical_isometry_check(matrix: &SensingMatrix, n_vectors: usize, seed: u64) -> Result<IsometryReport> {
    if n_vectors == 0 {
        return Err(PcsError::invalid("need at least one sample"));
    }
    let mut inside = 0usize;
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n_vectors {
        let mut rng = substream(seed, Domain::Isometry, k as u64);
        let u = unit_l2(&mut rng, matrix.n_cols());
        let au = apply_normalized(matrix, &u)?;
        let q: f64 = au.iter().map(|x| x * x).sum();
        if (0.5..=1.5).contains(&q) {
            inside += 1;
        }
        sum += q;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(IsometryReport {
        samples: n_vectors,
        fraction_in_band: inside as f64 / n_vectors as f64,
        mean_norm_sq: sum / n_vectors as f64,
        min_norm_sq: lo,
        max_norm_sq: hi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub samples: usize,
    pub c2: f64,
    /// `2c₂²ζ⁴·log(c₂ζ⁴m/N)/N`
    pub additive: f64,
    /// Fraction of unit-ℓ1 pairs with `‖u−v‖² ≤ 4‖Ã(u−v)‖² + additive`.
    pub fraction_satisfied: f64,
}

/// Samples pairs of unit-ℓ1 vectors and checks the pairwise lower bound.
pub fn empirical_pair_check(matrix: &SensingMatrix, n_pairs: usize, c2: f64, seed: u64) -> Result<PairReport> {
    if n_pairs == 0 {
        return Err(PcsError::invalid("need at least one sample"));
    }
    let additive = additive_term(matrix.n_rows(), matrix.n_cols(), matrix.p(), c2)?;
    let mut ok = 0usize;
    for k in 0..n_pairs {
        let mut rng = substream(seed, Domain::PairCheck, k as u64);
        let u = unit_l1(&mut rng, matrix.n_cols());
        let v = unit_l1(&mut rng, matrix.n_cols());
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let lhs: f64 = d.iter().map(|x| x * x).sum();
        let ad = apply_normalized(matrix, &d)?;
        let rhs = 4.0 * ad.iter().map(|x| x * x).sum::<f64>() + additive;
        if lhs <= rhs {
            ok += 1;
        }
    }
    Ok(PairReport {
        samples: n_pairs,
        c2,
        additive,
        fraction_satisfied: ok as f64 / n_pairs as f64,
    })
}

/// Mean and second moment of the implied `Z` entries of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub count: usize,
    pub mean: f64,
    pub second_moment: f64,
    /// Standard error of the mean.
    pub mean_se: f64,
    /// Standard error of the second moment.
    pub second_moment_se: f64,
}

pub fn implied_z_moments(matrix: &SensingMatrix) -> Result<MomentStats> {
    let p = matrix.p();
    check_p(p)?;
    let hi = crate::sensing::implied_z(true, p);
    let lo = crate::sensing::implied_z(false, p);
    let count = matrix.n_rows() * matrix.n_cols();
    let ones = matrix.nnz();
    let zeros = count - ones;
    let nf = count as f64;
    let mean = (ones as f64 * hi + zeros as f64 * lo) / nf;
    let second_moment = (ones as f64 * hi * hi + zeros as f64 * lo * lo) / nf;
    let fourth = (ones as f64 * hi.powi(4) + zeros as f64 * lo.powi(4)) / nf;
    Ok(MomentStats {
        count,
        mean,
        second_moment,
        mean_se: ((second_moment - mean * mean).max(0.0) / nf).sqrt(),
        second_moment_se: ((fourth - second_moment * second_moment).max(0.0) / nf).sqrt(),
    })
}
