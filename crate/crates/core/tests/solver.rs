use pcs_core::harness::{make_test_signal, SignalKind, SignalSpec};
use pcs_core::model::sample_poisson;
use pcs_core::spiral::{initialize, risk, solve, solve_from};
use pcs_core::{CountVector, PenaltyKind, RowScheme, SensingMatrix, Signal, SolverConfig, Termination};

struct Instance {
    signal: Signal,
    matrix: SensingMatrix,
    counts: CountVector,
}

fn instance(m: usize, n: usize, w: usize, intensity: f64) -> Instance {
    let signal = make_test_signal(&SignalSpec {
        kind: SignalKind::PiecewiseConstant { segments: 4 },
        length: m,
        intensity,
        seed: 7,
    })
    .unwrap();
    let matrix = SensingMatrix::build(n, m, RowScheme::FixedRowWeight { w }, 8).unwrap();
    let counts = sample_poisson(&matrix.apply(signal.values()).unwrap(), 9).unwrap();
    Instance { signal, matrix, counts }
}

fn cfg(penalty: PenaltyKind, tau: f64, max_iters: usize) -> SolverConfig {
    SolverConfig {
        tau,
        penalty,
        max_iters,
        ..SolverConfig::default()
    }
}

#[test]
fn every_penalty_descends_and_stays_nonnegative() {
    let inst = instance(128, 64, 16, 5e4);
    for (penalty, tau) in [
        (PenaltyKind::Rdp, 0.5),
        (PenaltyKind::RdpTi, 0.5),
        (PenaltyKind::L1Identity, 0.01),
        (PenaltyKind::L1Haar, 0.01),
    ] {
        let trace = solve::<f64>(&inst.counts, &inst.matrix, &cfg(penalty, tau, 200)).unwrap();
        assert!(trace.objective_nonincreasing(), "{penalty}");
        assert!(trace.estimate.iter().all(|&x| x >= 0.0), "{penalty}");
        assert_eq!(trace.records.len(), trace.iterations() + 1);
        assert!(trace.final_objective() <= trace.records[0].objective);
    }
}

#[test]
fn reconstruction_improves_on_initialization() {
    let inst = instance(128, 64, 16, 5e4);
    let y: Vec<f64> = inst.counts.to_real();
    let f0 = initialize(&y, &inst.matrix).unwrap();
    let r0 = risk(&f0, &inst.signal).unwrap();
    let trace = solve::<f64>(&inst.counts, &inst.matrix, &cfg(PenaltyKind::Rdp, 0.5, 300)).unwrap();
    let r = risk(&trace.estimate, &inst.signal).unwrap();
    assert!(r < r0, "risk {r} vs initial {r0}");
}

#[test]
fn single_precision_runs() {
    let inst = instance(64, 32, 8, 1e4);
    let t32 = solve::<f32>(&inst.counts, &inst.matrix, &cfg(PenaltyKind::Rdp, 0.5, 50)).unwrap();
    let t64 = solve::<f64>(&inst.counts, &inst.matrix, &cfg(PenaltyKind::Rdp, 0.5, 50)).unwrap();
    assert!(t32.objective_nonincreasing());
    let rel = ((t32.final_objective() as f64) - t64.final_objective()).abs() / t64.final_objective().abs();
    assert!(rel < 1e-3, "{rel}");
}

#[test]
fn renormalized_output_matches_total_counts() {
    let inst = instance(64, 32, 8, 1e4);
    let mut c = cfg(PenaltyKind::L1Haar, 0.01, 30);
    c.renormalize_output = true;
    let trace = solve::<f64>(&inst.counts, &inst.matrix, &c).unwrap();
    let flux: f64 = inst.matrix.apply(&trace.estimate).unwrap().iter().sum();
    let total = inst.counts.total() as f64;
    assert!((flux - total).abs() <= 1e-9 * total);
}

#[test]
fn time_budget_stops_the_solver() {
    let inst = instance(256, 128, 16, 1e5);
    let mut c = cfg(PenaltyKind::RdpTi, 1e-3, usize::MAX);
    c.rel_obj_tol = 0.0;
    c.time_budget_seconds = 0.05;
    let trace = solve::<f64>(&inst.counts, &inst.matrix, &c).unwrap();
    assert!(matches!(trace.termination, Termination::TimeBudget | Termination::Stalled | Termination::Stationary));
}

#[test]
fn iteration_bounded_runs_are_reproducible() {
    let inst = instance(128, 64, 16, 5e4);
    let c = cfg(PenaltyKind::RdpTi, 0.2, 40);
    let a = solve::<f64>(&inst.counts, &inst.matrix, &c).unwrap();
    let b = solve::<f64>(&inst.counts, &inst.matrix, &c).unwrap();
    assert_eq!(a.estimate, b.estimate);
    let strip = |t: &pcs_core::SolveTrace| -> Vec<(usize, f64, f64)> {
        t.records.iter().map(|r| (r.iter, r.eta, r.objective)).collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn infinite_start_aborts() {
    let inst = instance(64, 32, 8, 1e4);
    let y: Vec<f64> = inst.counts.to_real();
    let mut f0 = vec![1.0; 64];
    f0[3] = f64::INFINITY;
    let err = solve_from(&y, &inst.matrix, &cfg(PenaltyKind::L1Identity, 0.1, 10), f0).unwrap_err();
    assert!(err.is_solver_abort(), "{err}");
}

#[test]
fn trace_csv_layout() {
    let inst = instance(64, 32, 8, 1e4);
    let trace = solve::<f64>(&inst.counts, &inst.matrix, &cfg(PenaltyKind::Rdp, 0.5, 5)).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,eta,objective,phi,backtracks,elapsed_s"));
    assert_eq!(lines.count(), trace.records.len());
}
