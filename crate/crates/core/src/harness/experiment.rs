use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use super::config::{check_sweep_values, ExperimentConfig, SweepAxis};
use super::signals::make_test_signal;
use crate::error::{PcsError, Result};
use crate::model::{sample_poisson, CountVector};
use crate::rng::replicate_seed;
use crate::sensing::SensingMatrix;
use crate::signal::Signal;
use crate::spiral::{risk, solve, PenaltyKind, SolverConfig, Termination};

/// Header of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str = "axis,value,arm,tau_best,risk_mean,risk_sd,replicates";
/// Header of the per-run CSV. Wall-clock time is left out so the file is
/// reproducible.
pub const ROWS_CSV_HEADER: &str = "arm,tau,replicate,risk,final_objective,iterations,termination";

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub arm: String,
    pub tau: f64,
    pub replicate: usize,
    pub risk: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Whether every accepted iterate kept or lowered the objective.
    pub objective_nonincreasing: bool,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: String,
    pub tau_best: f64,
    /// Replicate mean of the risk at `tau_best`.
    pub risk_mean: f64,
    /// Sample standard deviation over replicates at `tau_best`; zero for a
    /// single replicate.
    pub risk_sd: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    /// Ordered by arm (config order), then τ (grid order), then replicate.
    pub records: Vec<RunRecord>,
    pub summaries: Vec<ArmSummary>,
    /// Mean detector count over all replicates.
    pub mean_count: f64,
}

impl RiskReport {
    pub fn summary(&self, arm: &str) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from(ROWS_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.arm, r.tau, r.replicate, r.risk, r.final_objective, r.iterations, r.termination
            );
        }
        out
    }
}

/// Scale that the τ grid multiplies, per penalty. Partition penalties are
/// already in nats so they use 1; ℓ1 penalties use the mean column mass of
/// the matrix, which sets the size of the likelihood gradient.
pub fn tau_scale(penalty: PenaltyKind, matrix: &SensingMatrix) -> f64 {
    match penalty {
        PenaltyKind::Rdp | PenaltyKind::RdpTi => 1.0,
        PenaltyKind::L1Identity | PenaltyKind::L1Haar => {
            matrix.nnz() as f64 * matrix.entry_value::<f64>() / matrix.n_cols() as f64
        }
    }
}

/// Summaries from per-run records: for each arm the τ with the smallest
/// replicate-mean risk (earliest τ on ties).
pub fn summarize(records: &[RunRecord]) -> Vec<ArmSummary> {
    let mut arms: Vec<&str> = Vec::new();
    for r in records {
        if !arms.contains(&r.arm.as_str()) {
            arms.push(&r.arm);
        }
    }
    arms.into_iter()
        .map(|arm| {
            let mut taus: Vec<f64> = Vec::new();
            for r in records.iter().filter(|r| r.arm == arm) {
                if !taus.contains(&r.tau) {
                    taus.push(r.tau);
                }
            }
            let mut best: Option<ArmSummary> = None;
            for tau in taus {
                let risks: Vec<f64> = records
                    .iter()
                    .filter(|r| r.arm == arm && r.tau == tau)
                    .map(|r| r.risk)
                    .collect();
                let n = risks.len() as f64;
                let mean = risks.iter().sum::<f64>() / n;
                let sd = if risks.len() > 1 {
                    (risks.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                if best.as_ref().is_none_or(|b| mean < b.risk_mean) {
                    best = Some(ArmSummary {
                        arm: arm.to_string(),
                        tau_best: tau,
                        risk_mean: mean,
                        risk_sd: sd,
                        replicates: risks.len(),
                    });
                }
            }
            best.expect("every arm has at least one record")
        })
        .collect()
}

/// Builds the matrix and signal once, draws one count vector per replicate
/// and solves every arm × τ × replicate combination. Runs are independent
/// and execute in parallel; the report order does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let signal = make_test_signal(&cfg.signal).map_err(|e| e.with_context("building signal"))?;
    let matrix = SensingMatrix::build(cfg.matrix.rows, cfg.signal.length, cfg.matrix.scheme, cfg.matrix.seed)
        .map_err(|e| e.with_context("building matrix"))?;
    let mu = matrix.apply(signal.values())?;
    let counts: Vec<CountVector> = (0..cfg.replicates)
        .map(|r| sample_poisson(&mu, replicate_seed(cfg.noise_seed, r as u64)))
        .collect::<Result<_>>()?;
    let mean_count =
        counts.iter().map(|c| c.total() as f64).sum::<f64>() / (cfg.replicates * matrix.n_rows()) as f64;

    let mut tasks = Vec::new();
    for arm in &cfg.arms {
        let scale = tau_scale(arm.solver.penalty, &matrix);
        for &mult in &cfg.tau_grid {
            for r in 0..cfg.replicates {
                tasks.push((arm, mult * scale, r));
            }
        }
    }

    let records = tasks
        .into_par_iter()
        .map(|(arm, tau, r)| {
            let solver = SolverConfig {
                tau,
                ..arm.solver.clone()
            };
            run_one(&signal, &matrix, &counts[r], &solver)
                .map(|outcome| RunRecord {
                    arm: arm.name.clone(),
                    tau,
                    replicate: r,
                    ..outcome
                })
                .map_err(|e| e.with_context(format!("arm {} tau {tau} replicate {r}", arm.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RiskReport {
        summaries: summarize(&records),
        records,
        mean_count,
    })
}

fn run_one(signal: &Signal, matrix: &SensingMatrix, counts: &CountVector, solver: &SolverConfig) -> Result<RunRecord> {
    let trace = solve::<f64>(counts, matrix, solver)?;
    Ok(RunRecord {
        arm: String::new(),
        tau: solver.tau,
        replicate: 0,
        risk: risk(&trace.estimate, signal)?,
        final_objective: trace.final_objective(),
        iterations: trace.iterations(),
        termination: trace.termination,
        objective_nonincreasing: trace.objective_nonincreasing(),
        elapsed_s: trace.records.last().map_or(0.0, |r| r.elapsed_s),
    })
}

/// One report per value of `axis`, in the order given.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<(f64, RiskReport)>> {
    check_sweep_values(values)?;
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match axis {
                SweepAxis::N => {
                    if v.fract() != 0.0 {
                        return Err(PcsError::invalid(format!("detector count {v} is not an integer")));
                    }
                    c.matrix.rows = v as usize;
                }
                SweepAxis::I => c.signal.intensity = v,
            }
            run_experiment(&c)
                .map(|r| (v, r))
                .map_err(|e| e.with_context(format!("sweep {axis} = {v}")))
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(mut out: W, axis: SweepAxis, reports: &[(f64, RiskReport)]) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for (value, report) in reports {
        for s in &report.summaries {
            writeln!(
                out,
                "{axis},{value},{},{},{},{},{}",
                s.arm, s.tau_best, s.risk_mean, s.risk_sd, s.replicates
            )?;
        }
    }
    Ok(())
}

/// Runs the sweep configured in `cfg`, or a single experiment reported as a
/// one-value sweep over `I` when none is configured, and renders the CSV.
pub fn run_configured(cfg: &ExperimentConfig) -> Result<String> {
    let (axis, values) = match &cfg.sweep {
        Some((axis, values)) => (*axis, values.clone()),
        None => (SweepAxis::I, vec![cfg.signal.intensity]),
    };
    let reports = sweep(cfg, axis, &values)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, axis, &reports)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}
