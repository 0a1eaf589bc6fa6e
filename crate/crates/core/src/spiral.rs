//! Penalized Poisson likelihood reconstruction by sequential separable
//! quadratic approximation.
//!
//! Each iteration replaces the negative log-likelihood `φ` by its gradient
//! plus a scalar curvature `η_k` times the identity, which turns the update
//! into a denoising problem:
//!
//! ```text
//! f⁺ = argmin_{f ⪰ 0} ‖(f_k − ∇φ(f_k)/η_k) − f‖² + (2τ/η_k)·pen(f)
//! ```
//!
//! `η_k` starts from the Barzilai–Borwein ratio and is increased until the
//! penalized objective does not increase.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::error::{check_len, PcsError, Result};
use crate::model::{gradient_weights, neg_log_likelihood, CountVector, LogFloor};
use crate::penalties::rdp::{
    dyadic_leaf_count, dyadic_leaf_count_ti, rdp_denoise_bounded, rdp_denoise_ti_bounded, LeafCost,
};
use crate::penalties::wavelet::{l1_norm_in, soft_threshold_basis, Basis};
use crate::scalar::{dot, norm2_sq, Scalar};
use crate::sensing::SensingMatrix;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PenaltyKind {
    /// Pruned dyadic partition.
    Rdp,
    /// Pruned dyadic partition averaged over all circular shifts.
    RdpTi,
    /// `‖f‖₁`.
    L1Identity,
    /// `‖Wᵀf‖₁` in the Haar basis.
    L1Haar,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::Rdp,
        PenaltyKind::RdpTi,
        PenaltyKind::L1Identity,
        PenaltyKind::L1Haar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Rdp => "rdp",
            PenaltyKind::RdpTi => "rdp-ti",
            PenaltyKind::L1Identity => "l1",
            PenaltyKind::L1Haar => "l1-haar",
        }
    }

    pub fn needs_power_of_two(self) -> bool {
        !matches!(self, PenaltyKind::L1Identity)
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = PcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rdp" => Ok(PenaltyKind::Rdp),
            "rdp-ti" | "rdp_ti" | "rdpti" => Ok(PenaltyKind::RdpTi),
            "l1" | "l1-identity" | "l1_identity" => Ok(PenaltyKind::L1Identity),
            "l1-haar" | "l1_haar" => Ok(PenaltyKind::L1Haar),
            other => Err(PcsError::invalid(format!("unknown penalty {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Regularization weight `τ`.
    pub tau: f64,
    pub penalty: PenaltyKind,
    /// Per-leaf charge of the partition penalties.
    pub leaf_cost: LeafCost,
    pub max_iters: usize,
    /// Wall-clock limit in seconds; `0` disables it.
    pub time_budget_seconds: f64,
    /// Stop once the relative objective change stays below this for 5
    /// consecutive accepted iterations.
    pub rel_obj_tol: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub bb_enabled: bool,
    pub backtrack_factor: f64,
    /// Backtracking steps allowed per iteration before the solve is declared stalled.
    pub max_backtracks: usize,
    /// Rescale the final estimate so that `Σ(Af̂) = Σy`.
    pub renormalize_output: bool,
    /// Floor inside `log(Af)`; `None` uses `1e-10` times the mean count.
    pub log_floor: Option<LogFloor>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            penalty: PenaltyKind::Rdp,
            leaf_cost: LeafCost::Codelength,
            max_iters: 10_000,
            time_budget_seconds: 0.0,
            rel_obj_tol: 1e-8,
            eta_min: 1e-30,
            eta_max: 1e30,
            bb_enabled: true,
            backtrack_factor: 2.0,
            max_backtracks: 60,
            renormalize_output: false,
            log_floor: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(PcsError::invalid("tau must be nonnegative"));
        }
        if !(self.eta_min > 0.0 && self.eta_min <= self.eta_max) {
            return Err(PcsError::invalid("need 0 < eta_min <= eta_max"));
        }
        if !(self.rel_obj_tol >= 0.0) {
            return Err(PcsError::invalid("rel_obj_tol must be nonnegative"));
        }
        if !(self.backtrack_factor > 1.0) {
            return Err(PcsError::invalid("backtrack_factor must exceed 1"));
        }
        if !(self.time_budget_seconds >= 0.0) {
            return Err(PcsError::invalid("time budget must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord<T: Scalar = f64> {
    pub iter: usize,
    pub eta: T,
    /// `φ + τ·pen`.
    pub objective: T,
    pub phi: T,
    pub backtracks: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIters,
    TimeBudget,
    /// Relative objective change below tolerance for 5 accepted iterations.
    Converged,
    /// The subproblem returned the current iterate.
    Stationary,
    /// No curvature within the backtracking limit decreased the objective.
    Stalled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::MaxIters => "max-iters",
            Termination::TimeBudget => "time-budget",
            Termination::Converged => "converged",
            Termination::Stationary => "stationary",
            Termination::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T: Scalar = f64> {
    /// Record 0 is the initial point; later records are accepted iterates.
    pub records: Vec<IterRecord<T>>,
    pub estimate: Vec<T>,
    pub termination: Termination,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> T {
        self.records.last().map(|r| r.objective).unwrap_or_else(T::nan)
    }

    pub fn objective_nonincreasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].objective <= w[0].objective)
    }

    /// CSV with header `iter,eta,objective,phi,backtracks,elapsed_s`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,eta,objective,phi,backtracks,elapsed_s")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{},{:.6}",
                r.iter, r.eta, r.objective, r.phi, r.backtracks, r.elapsed_s
            )?;
        }
        Ok(())
    }
}

/// Starting point shared by all penalties: with `z = Aᵀy` and
/// `x_i = y_i/(Az)_i`, `f⁰_j = z_j·(Aᵀx)_j/(Aᵀ1)_j`.
pub fn initialize<T: Scalar>(y: &[T], matrix: &SensingMatrix) -> Result<Vec<T>> {
    check_len(matrix.n_rows(), y.len())?;
    let z = matrix.apply_adjoint(y)?;
    if z.iter().all(|&v| v == T::zero()) {
        return Ok(z);
    }
    let az = matrix.apply(&z)?;
    let x: Vec<T> = y
        .iter()
        .zip(&az)
        .map(|(&yi, &ai)| if ai > T::zero() { yi / ai } else { T::zero() })
        .collect();
    let atx = matrix.apply_adjoint(&x)?;
    let at1 = matrix.apply_adjoint(&vec![T::one(); matrix.n_rows()])?;
    Ok(z.iter()
        .zip(&atx)
        .zip(&at1)
        .map(|((&zj, &xj), &cj)| if cj > T::zero() { zj * xj / cj } else { T::zero() })
        .collect())
}

/// `‖f̂ − f*‖²₂ / I²` with `I` the total intensity of `f*`.
pub fn risk<T: Scalar>(f_hat: &[T], f_star: &Signal<T>) -> Result<T> {
    check_len(f_star.len(), f_hat.len())?;
    let intensity = f_star.total_intensity();
    if !(intensity > T::zero()) {
        return Err(PcsError::Domain("risk needs a positive total intensity".into()));
    }
    let err: T = f_hat
        .iter()
        .zip(f_star.values())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(err / (intensity * intensity))
}

/// Runs the solver from the standard initialization.
pub fn solve<T: Scalar>(y: &CountVector, matrix: &SensingMatrix, cfg: &SolverConfig) -> Result<SolveTrace<T>> {
    let y_real: Vec<T> = y.to_real();
    let f0 = initialize(&y_real, matrix)?;
    solve_from(&y_real, matrix, cfg, f0)
}

/// Runs the solver from an explicit starting point; observations may be
/// real-valued.
pub fn solve_from<T: Scalar>(
    y: &[T],
    matrix: &SensingMatrix,
    cfg: &SolverConfig,
    f0: Vec<T>,
) -> Result<SolveTrace<T>> {
    cfg.validate()?;
    check_len(matrix.n_rows(), y.len())?;
    check_len(matrix.n_cols(), f0.len())?;
    let m = matrix.n_cols();
    if cfg.penalty.needs_power_of_two() && !m.is_power_of_two() {
        return Err(PcsError::NotPowerOfTwo(m));
    }
    if y.iter().any(|v| !(*v >= T::zero())) {
        return Err(PcsError::Domain("observations must be nonnegative".into()));
    }

    let start = Instant::now();
    let total_counts: T = y.iter().copied().sum();
    let floor = cfg.log_floor.unwrap_or_else(|| {
        let mean = total_counts.as_f64() / matrix.n_rows() as f64;
        if mean > 0.0 {
            LogFloor::Absolute(1e-10 * mean)
        } else {
            LogFloor::default()
        }
    });
    let problem = Problem {
        y,
        matrix,
        cfg,
        floor,
        tau: T::lit(cfg.tau),
        leaf: cfg.leaf_cost.per_leaf(m),
    };

    let mut f: Vec<T> = f0.into_iter().map(|v| v.max(T::zero())).collect();
    let mut mu = matrix.apply(&f)?;
    let mut phi = problem.phi(&mu)?;
    let mut obj = phi + problem.tau * problem.penalty_exact(&f)?;
    let mut grad = problem.gradient(&mu)?;
    problem.check_finite(obj, 0)?;

    let eps = T::lit(1e-12);
    let eta_min = T::lit(cfg.eta_min);
    let eta_max = T::lit(cfg.eta_max);
    let factor = T::lit(cfg.backtrack_factor);
    let mut eta = (norm2_sq(&grad).sqrt() / (norm2_sq(&f).sqrt() + eps)).max(eta_min).min(eta_max);

    let mut records = vec![IterRecord {
        iter: 0,
        eta,
        objective: obj,
        phi,
        backtracks: 0,
        elapsed_s: start.elapsed().as_secs_f64(),
    }];
    let mut small_changes = 0usize;
    let mut termination = Termination::MaxIters;

    for iter in 1..=cfg.max_iters {
        if cfg.time_budget_seconds > 0.0 && start.elapsed().as_secs_f64() >= cfg.time_budget_seconds {
            termination = Termination::TimeBudget;
            break;
        }

        let mut backtracks = 0usize;
        let accepted = loop {
            let step: Vec<T> = f.iter().zip(&grad).map(|(&fi, &gi)| fi - gi / eta).collect();
            let (cand, pen) = problem.denoise(&step, eta)?;
            let cand_mu = matrix.apply(&cand)?;
            let cand_phi = problem.phi(&cand_mu)?;
            let cand_obj = cand_phi + problem.tau * pen;
            problem.check_finite(cand_obj, iter)?;
            if cand_obj <= obj {
                break Some((cand, cand_mu, cand_phi, cand_obj));
            }
            if cand == f {
                // The subproblem returns the current point but its penalty
                // bookkeeping disagrees; nothing further can be gained.
                break None;
            }
            backtracks += 1;
            eta *= factor;
            if backtracks > cfg.max_backtracks || eta > eta_max {
                break None;
            }
        };
        let Some((cand, cand_mu, cand_phi, cand_obj)) = accepted else {
            termination = Termination::Stalled;
            break;
        };

        let delta_f: Vec<T> = cand.iter().zip(&f).map(|(&a, &b)| a - b).collect();
        let stationary = delta_f.iter().all(|&d| d == T::zero());
        let new_grad = problem.gradient(&cand_mu)?;
        let rel_change = (obj - cand_obj).abs() / cand_obj.abs().max(T::min_positive_value());

        let eta_used = eta;
        if cfg.bb_enabled && !stationary {
            let delta_g: Vec<T> = new_grad.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
            let bb = dot(&delta_f, &delta_g) / norm2_sq(&delta_f);
            eta = if bb.is_finite() { bb.max(eta_min).min(eta_max) } else { eta_max };
        }

        f = cand;
        mu = cand_mu;
        phi = cand_phi;
        obj = cand_obj;
        grad = new_grad;
        records.push(IterRecord {
            iter,
            eta: eta_used,
            objective: obj,
            phi,
            backtracks,
            elapsed_s: start.elapsed().as_secs_f64(),
        });

        if stationary {
            termination = Termination::Stationary;
            break;
        }
        if rel_change < T::lit(cfg.rel_obj_tol) {
            small_changes += 1;
            if small_changes >= 5 {
                termination = Termination::Converged;
                break;
            }
        } else {
            small_changes = 0;
        }
    }

    if cfg.renormalize_output {
        let flux: T = mu.iter().copied().sum();
        if flux > T::zero() {
            let scale = total_counts / flux;
            for v in &mut f {
                *v *= scale;
            }
        }
    }

    Ok(SolveTrace {
        records,
        estimate: f,
        termination,
    })
}

struct Problem<'a, T: Scalar> {
    y: &'a [T],
    matrix: &'a SensingMatrix,
    cfg: &'a SolverConfig,
    floor: LogFloor,
    tau: T,
    leaf: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn phi(&self, mu: &[T]) -> Result<T> {
        neg_log_likelihood(self.y, mu, self.floor)
    }

    fn gradient(&self, mu: &[T]) -> Result<Vec<T>> {
        let w = gradient_weights(self.y, mu, self.floor)?;
        self.matrix.apply_adjoint(&w)
    }

    fn check_finite(&self, obj: T, iter: usize) -> Result<()> {
        if obj.is_finite() {
            Ok(())
        } else {
            Err(PcsError::SolverAbort(format!(
                "objective is {obj} at iteration {iter} (penalty {}, tau {})",
                self.cfg.penalty, self.cfg.tau
            )))
        }
    }

    /// Penalty of an arbitrary point (used for the starting point).
    fn penalty_exact(&self, f: &[T]) -> Result<T> {
        Ok(match self.cfg.penalty {
            PenaltyKind::Rdp => self.leaf * T::from_count(dyadic_leaf_count(f)?),
            PenaltyKind::RdpTi => self.leaf * dyadic_leaf_count_ti(f)?,
            PenaltyKind::L1Identity => l1_norm_in(f, Basis::Identity)?,
            PenaltyKind::L1Haar => l1_norm_in(f, Basis::Haar)?,
        })
    }

    /// Solves the denoising subproblem at curvature `eta`; returns the
    /// nonnegative candidate and its penalty.
    fn denoise(&self, v: &[T], eta: T) -> Result<(Vec<T>, T)> {
        let weight = T::lit(2.0) * self.tau / eta;
        let zero = Some(T::zero());
        match self.cfg.penalty {
            PenaltyKind::Rdp => {
                let fit = rdp_denoise_bounded(v, weight * self.leaf, zero)?;
                let out = fit.to_vector();
                let pen = self.leaf * T::from_count(dyadic_leaf_count(&out)?);
                Ok((out, pen))
            }
            PenaltyKind::RdpTi => {
                let fit = rdp_denoise_ti_bounded(v, weight * self.leaf, zero)?;
                Ok((fit.values, self.leaf * fit.mean_leaf_count))
            }
            PenaltyKind::L1Identity | PenaltyKind::L1Haar => {
                let basis = if self.cfg.penalty == PenaltyKind::L1Haar {
                    Basis::Haar
                } else {
                    Basis::Identity
                };
                let out: Vec<T> = soft_threshold_basis(v, weight, basis)?
                    .into_iter()
                    .map(|x| x.max(T::zero()))
                    .collect();
                let pen = l1_norm_in(&out, basis)?;
                Ok((out, pen))
            }
        }
    }
}
