//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use pcs_core::SensingMatrix;

pub fn dense(a: &SensingMatrix) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; a.n_cols()]; a.n_rows()];
    for (i, row) in a.rows().enumerate() {
        for &j in row {
            d[i][j as usize] = 1.0 / a.n_rows() as f64;
        }
    }
    d
}

pub fn dense_apply(d: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    d.iter().map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum()).collect()
}

/// Negative log-likelihood including the `log y!` terms, from the Poisson pmf.
pub fn nll_from_pmf(y: &[u64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&k, &m)| {
            let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
            -(k as f64 * m.ln() - m - log_fact)
        })
        .sum()
}

/// `Σ_y p(y|g) log(p(y|g)/p(y|h))` per entry, summed; the series is cut
/// once the terms are negligible.
pub fn kl_truncated(g: &[f64], h: &[f64]) -> f64 {
    g.iter()
        .zip(h)
        .map(|(&a, &b)| {
            let mut total = 0.0;
            let mut log_pa = -a;
            let mut log_pb = -b;
            for k in 0..400u64 {
                if k > 0 {
                    log_pa += a.ln() - (k as f64).ln();
                    log_pb += b.ln() - (k as f64).ln();
                }
                total += log_pa.exp() * (log_pa - log_pb);
            }
            total
        })
        .sum()
}

/// `−2 log Π_i Σ_y √(p(y|g_i) p(y|h_i))` by direct summation of the pmfs.
pub fn hellinger_truncated(g: &[f64], h: &[f64]) -> f64 {
    let log_aff: f64 = g
        .iter()
        .zip(h)
        .map(|(&a, &b)| {
            let mut term = (-(a + b) / 2.0).exp();
            let r = (a * b).sqrt();
            let mut sum = term;
            for k in 1..400u64 {
                term *= r / k as f64;
                sum += term;
            }
            sum.ln()
        })
        .sum();
    -2.0 * log_aff
}

/// Every pruned dyadic partition of `start..start+len` as a list of `(start, len)` leaves.
fn partitions(start: usize, len: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![vec![(start, len)]];
    if len > 1 {
        let h = len / 2;
        let left = partitions(start, h);
        let right = partitions(start + h, h);
        for l in &left {
            for r in &right {
                let mut p = l.clone();
                p.extend_from_slice(r);
                out.push(p);
            }
        }
    }
    out
}

/// Minimum of `Σ(v − leaf mean)² + γ·leaves` over all pruned partitions.
pub fn rdp_brute_force(v: &[f64], gamma: f64) -> f64 {
    partitions(0, v.len())
        .iter()
        .map(|p| {
            p.iter()
                .map(|&(s, l)| {
                    let seg = &v[s..s + l];
                    let mean = seg.iter().sum::<f64>() / l as f64;
                    seg.iter().map(|x| (x - mean).powi(2)).sum::<f64>() + gamma
                })
                .sum()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cycle spinning spelled out: shift, denoise, unshift, average.
pub fn ti_naive(v: &[f64], gamma: f64) -> Vec<f64> {
    let n = v.len();
    let mut acc = vec![0.0; n];
    for s in 0..n {
        let shifted: Vec<f64> = (0..n).map(|i| v[(i + s) % n]).collect();
        let fit = pcs_core::penalties::rdp_denoise(&shifted, gamma).unwrap().to_vector();
        for i in 0..n {
            acc[(i + s) % n] += fit[i];
        }
    }
    acc.iter().map(|x| x / n as f64).collect()
}

/// Projection onto `{x ⪰ cI, Σx = I}` by trying every set of free
/// coordinates and keeping the closest feasible candidate.
pub fn project_active_set(g: &[f64], intensity: f64, c: f64) -> Vec<f64> {
    let m = g.len();
    let floor = c * intensity;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let free: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let fixed_mass = (m - free.len()) as f64 * floor;
        let lambda = (free.iter().map(|&i| g[i]).sum::<f64>() - (intensity - fixed_mass)) / free.len() as f64;
        let x: Vec<f64> = (0..m)
            .map(|i| if mask & (1 << i) != 0 { g[i] - lambda } else { floor })
            .collect();
        if x.iter().any(|&xi| xi < floor - 1e-12) {
            continue;
        }
        let d: f64 = x.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("the projection lies on one of the faces").1
}

/// Central finite-difference gradient of `phi`.
pub fn fd_gradient(phi: impl Fn(&[f64]) -> f64, f: &[f64]) -> Vec<f64> {
    (0..f.len())
        .map(|j| {
            let h = 1e-5 * (1.0 + f[j].abs());
            let mut up = f.to_vec();
            let mut down = f.to_vec();
            up[j] += h;
            down[j] -= h;
            (phi(&up) - phi(&down)) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
