use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pcs_core::harness::{self, ExperimentConfig, SignalKind, SignalSpec, SweepAxis};
use pcs_core::io::{read_counts, read_values, write_values};
use pcs_core::model::sample_poisson;
use pcs_core::spiral::{self, SolverConfig};
use pcs_core::theory::{self, BoundParams};
use pcs_core::{Basis, LeafCost, PcsError, PenaltyKind, RowScheme, SensingMatrix};

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER_ABORT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pcs", version, about = "Photon-limited compressed sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a sensing matrix and check it against the physical constraints.
    GenMatrix(GenMatrix),
    /// Write a test signal, one value per line.
    GenSignal(GenSignal),
    /// Draw Poisson counts for a signal seen through a matrix.
    Simulate(Simulate),
    /// Reconstruct a signal from counts.
    Reconstruct(Reconstruct),
    /// Run the experiment described by a config file and write the risk CSV.
    Sweep(Sweep),
    /// Monte-Carlo checks of the matrix isometry properties.
    VerifyTheory(VerifyTheory),
    /// Tabulate the risk bound over the sparsity level k.
    Bound(Bound),
}

#[derive(Args, Debug)]
struct GenMatrix {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Probability of a zero entry (i.i.d. rows).
    #[arg(long, conflicts_with = "row_weight", required_unless_present = "row_weight")]
    p: Option<f64>,
    /// Exact number of nonzeros per row.
    #[arg(long)]
    row_weight: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignalArg {
    Constant,
    PiecewiseConstant,
    PiecewiseSmooth,
    Compressible,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    Identity,
    Haar,
}

#[derive(Args, Debug)]
struct GenSignal {
    #[arg(long, value_enum, default_value = "piecewise-constant")]
    kind: SignalArg,
    #[arg(long, default_value_t = 1024)]
    length: usize,
    #[arg(long, default_value_t = 8.2e5)]
    intensity: f64,
    #[arg(long, default_value_t = 8)]
    segments: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "haar")]
    basis: BasisArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Simulate {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Reconstruct {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    /// rdp, rdp-ti, l1 or l1-haar
    #[arg(long, default_value = "rdp")]
    penalty: PenaltyKind,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Wall-clock budget in seconds; 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    time_budget: f64,
    /// Charge ln(m) per partition leaf instead of 1.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    codelength_leaves: bool,
    #[arg(long)]
    renormalize: bool,
    /// Per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Sweep {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write one CSV row per arm, τ and replicate.
    #[arg(long)]
    runs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyTheory {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1000)]
    vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
}

#[derive(Args, Debug)]
struct Bound {
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 8.2e5)]
    intensity: f64,
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 1.0)]
    c4: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<ValidationFailed>() {
        return EXIT_VALIDATION;
    }
    match err.downcast_ref::<PcsError>() {
        Some(e) if e.is_solver_abort() => EXIT_SOLVER_ABORT,
        Some(e) if matches!(e.root(), PcsError::Io(_)) => EXIT_FAILURE,
        Some(_) => EXIT_VALIDATION,
        None => EXIT_FAILURE,
    }
}

#[derive(Debug)]
struct ValidationFailed(String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenMatrix(a) => gen_matrix(a),
        Command::GenSignal(a) => gen_signal(a),
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Sweep(a) => sweep(a),
        Command::VerifyTheory(a) => verify_theory(a),
        Command::Bound(a) => bound(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_matrix(path: &Path) -> Result<SensingMatrix> {
    Ok(SensingMatrix::read_from(open(path)?)?)
}

fn gen_matrix(a: GenMatrix) -> Result<()> {
    let scheme = match (a.row_weight, a.p) {
        (Some(w), _) => RowScheme::FixedRowWeight { w },
        (None, Some(p)) => RowScheme::IidBernoulli { p },
        (None, None) => bail!(PcsError::invalid("give --p or --row-weight")),
    };
    let matrix = SensingMatrix::build(a.rows, a.cols, scheme, a.seed)?;
    let report = matrix.validate(a.trials, a.seed)?;
    eprintln!("{report}");
    if !report.passed() {
        return Err(ValidationFailed("matrix failed the physical-feasibility checks".into()).into());
    }
    let mut out = create(&a.out)?;
    matrix.write_to(&mut out)?;
    out.flush()?;
    Ok(())
}

fn gen_signal(a: GenSignal) -> Result<()> {
    let kind = match a.kind {
        SignalArg::Constant => SignalKind::Constant,
        SignalArg::PiecewiseConstant => SignalKind::PiecewiseConstant { segments: a.segments },
        SignalArg::PiecewiseSmooth => SignalKind::PiecewiseSmooth { segments: a.segments },
        SignalArg::Compressible => SignalKind::Compressible {
            alpha: a.alpha,
            rho: a.rho,
            c: a.c,
            basis: match a.basis {
                BasisArg::Identity => Basis::Identity,
                BasisArg::Haar => Basis::Haar,
            },
        },
    };
    let signal = harness::make_test_signal(&SignalSpec {
        kind,
        length: a.length,
        intensity: a.intensity,
        seed: a.seed,
    })?;
    let mut out = create(&a.out)?;
    write_values(&mut out, signal.values())?;
    out.flush()?;
    Ok(())
}

fn simulate(a: Simulate) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let signal = read_values(open(&a.signal)?)?;
    if signal.iter().any(|v| v.is_nan() || *v < 0.0) {
        bail!(PcsError::Domain("signal values must be nonnegative".into()));
    }
    let mu = matrix.apply(&signal).map_err(|e| e.with_context("applying matrix to signal"))?;
    let counts = sample_poisson(&mu, a.seed)?;
    eprintln!("mean count {:.3}", counts.total() as f64 / counts.len().max(1) as f64);
    let mut out = create(&a.out)?;
    write_values(&mut out, counts.as_slice())?;
    out.flush()?;
    Ok(())
}

fn reconstruct(a: Reconstruct) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let counts = read_counts(open(&a.counts)?)?;
    let cfg = SolverConfig {
        tau: a.tau,
        penalty: a.penalty,
        leaf_cost: if a.codelength_leaves { LeafCost::Codelength } else { LeafCost::Raw },
        max_iters: a.max_iters,
        time_budget_seconds: a.time_budget,
        rel_obj_tol: a.tol,
        renormalize_output: a.renormalize,
        ..SolverConfig::default()
    };
    let trace = spiral::solve::<f64>(&counts, &matrix, &cfg)?;
    eprintln!(
        "{} after {} iterations, objective {:e}",
        trace.termination,
        trace.iterations(),
        trace.final_objective()
    );
    if let Some(path) = &a.trace {
        let mut t = create(path)?;
        trace.write_csv(&mut t)?;
        t.flush()?;
    }
    let mut out = create(&a.out)?;
    write_values(&mut out, &trace.estimate)?;
    out.flush()?;
    Ok(())
}

fn sweep(a: Sweep) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let (axis, values) = cfg
        .sweep
        .clone()
        .unwrap_or((SweepAxis::I, vec![cfg.signal.intensity]));
    let reports = harness::sweep(&cfg, axis, &values)?;
    for (value, report) in &reports {
        eprintln!("{axis} = {value}: mean count {:.3}", report.mean_count);
    }
    let mut out = create(&a.out)?;
    harness::write_sweep_csv(&mut out, axis, &reports)?;
    out.flush()?;
    if let Some(path) = &a.runs {
        let mut runs = create(path)?;
        writeln!(runs, "value,{}", harness::ROWS_CSV_HEADER)?;
        for (value, report) in &reports {
            for line in report.rows_csv().lines().skip(1) {
                writeln!(runs, "{value},{line}")?;
            }
        }
        runs.flush()?;
    }
    Ok(())
}

fn verify_theory(a: VerifyTheory) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let iso = theory::empirical_isometry_check(&matrix, a.vectors, a.seed)?;
    let pair = theory::empirical_pair_check(&matrix, a.vectors, a.c2, a.seed)?;
    let z = theory::implied_z_moments(&matrix)?;
    let stdout = io::stdout();
    let mut o = stdout.lock();
    writeln!(o, "rows,{}", matrix.n_rows())?;
    writeln!(o, "cols,{}", matrix.n_cols())?;
    writeln!(o, "p,{}", matrix.p())?;
    writeln!(o, "isometry_samples,{}", iso.samples)?;
    writeln!(o, "isometry_fraction,{}", iso.fraction_in_band)?;
    writeln!(o, "isometry_mean,{}", iso.mean_norm_sq)?;
    writeln!(o, "isometry_min,{}", iso.min_norm_sq)?;
    writeln!(o, "isometry_max,{}", iso.max_norm_sq)?;
    writeln!(o, "pair_c2,{}", pair.c2)?;
    writeln!(o, "pair_additive,{}", pair.additive)?;
    writeln!(o, "pair_fraction,{}", pair.fraction_satisfied)?;
    writeln!(o, "z_mean,{}", z.mean)?;
    writeln!(o, "z_mean_se,{}", z.mean_se)?;
    writeln!(o, "z_second_moment,{}", z.second_moment)?;
    writeln!(o, "z_second_moment_se,{}", z.second_moment_se)?;
    Ok(())
}

fn bound(a: Bound) -> Result<()> {
    let params = BoundParams {
        m: a.m,
        n: a.n,
        p: a.p,
        intensity: a.intensity,
        alpha: a.alpha,
        rho: a.rho,
        c: a.c,
        c2: a.c2,
        c4: a.c4,
    };
    let report = theory::evaluate_bound(&params)?;
    eprintln!("zeta_p    {}", report.zeta_p);
    eprintln!("C_N,p     {}", report.c_np);
    eprintln!("k_*       {}", report.k_star);
    match report.minimum {
        Some((k, v)) => eprintln!("min       {v:e} at k = {k}"),
        None => eprintln!("min       none (k_* < 1)"),
    }
    eprintln!("additive  {:e}", report.additive);
    if let Some(t) = report.total() {
        eprintln!("total     {t:e}");
    }
    eprintln!("regime    {:?}", report.regime);
    eprintln!("saturated {}", report.saturated);
    eprintln!("note: {}", theory::CONSTANTS_CAVEAT);
    let csv = report.to_csv();
    match &a.out {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(csv.as_bytes())?;
            out.flush()?;
        }
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}
