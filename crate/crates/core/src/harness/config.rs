//! Experiment configuration and its `key = value` file format.
//!
//! ```text
//! [signal]
//! kind = piecewise-constant      # constant | piecewise-constant | piecewise-smooth | compressible
//! length = 1024
//! intensity = 8.2e5
//! segments = 8
//! seed = 1
//!
//! [matrix]
//! rows = 512
//! row_weight = 32                # or: p = 0.5
//! seed = 2
//!
//! [solver.rdp]
//! penalty = rdp
//! max_iters = 200
//!
//! [sweep]
//! replicates = 4
//! noise_seed = 3
//! tau = 0.1, 1, 10               # or tau_min / tau_max / tau_points
//! axis = I                       # optional: N | I
//! values = 1e5, 1e6
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{PcsError, Result};
use crate::model::LogFloor;
use crate::penalties::rdp::LeafCost;
use crate::penalties::wavelet::Basis;
use crate::sensing::RowScheme;
use crate::spiral::{PenaltyKind, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Constant,
    PiecewiseConstant { segments: usize },
    /// Piecewise constant with a 3-tap average across every segment boundary.
    PiecewiseSmooth { segments: usize },
    Compressible { alpha: f64, rho: f64, c: f64, basis: Basis },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub length: usize,
    pub intensity: f64,
    pub seed: u64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            kind: SignalKind::PiecewiseConstant { segments: 8 },
            length: 1024,
            intensity: 8.2e5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub rows: usize,
    pub scheme: RowScheme,
    pub seed: u64,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        Self {
            rows: 512,
            scheme: RowScheme::FixedRowWeight { w: 32 },
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub solver: SolverConfig,
}

impl Arm {
    pub fn new(penalty: PenaltyKind, max_iters: usize) -> Self {
        Self {
            name: penalty.name().to_string(),
            solver: SolverConfig {
                penalty,
                max_iters,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Number of detectors.
    N,
    /// Total intensity.
    I,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::N => "N",
            SweepAxis::I => "I",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = PcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "rows" => Ok(SweepAxis::N),
            "I" | "i" | "intensity" => Ok(SweepAxis::I),
            other => Err(PcsError::invalid(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    pub matrix: MatrixSpec,
    pub noise_seed: u64,
    pub arms: Vec<Arm>,
    /// Multipliers applied to each arm's data-scale estimate of `τ`.
    pub tau_grid: Vec<f64>,
    pub replicates: usize,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
}

/// `points` values log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
                .collect()
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            signal: SignalSpec::default(),
            matrix: MatrixSpec::default(),
            noise_seed: 3,
            arms: vec![Arm::new(PenaltyKind::Rdp, 200), Arm::new(PenaltyKind::RdpTi, 200)],
            tau_grid: log_grid(1e-3, 1e3, 12),
            replicates: 4,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.signal.length == 0 || !(self.signal.intensity > 0.0) {
            return Err(PcsError::invalid("signal length and intensity must be positive"));
        }
        if self.matrix.rows == 0 {
            return Err(PcsError::invalid("matrix needs at least one row"));
        }
        if self.arms.is_empty() {
            return Err(PcsError::invalid("no solver arms configured"));
        }
        if self.tau_grid.is_empty() || self.tau_grid.iter().any(|t| !(*t >= 0.0)) {
            return Err(PcsError::invalid("tau grid must be nonempty and nonnegative"));
        }
        if self.replicates == 0 {
            return Err(PcsError::invalid("need at least one replicate"));
        }
        let mut names: Vec<&str> = self.arms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(PcsError::invalid("arm names must be unique"));
        }
        for arm in &self.arms {
            arm.solver.validate()?;
            if arm.solver.penalty.needs_power_of_two() && !self.signal.length.is_power_of_two() {
                return Err(PcsError::invalid(format!(
                    "arm {} needs a power-of-two signal length, got {}",
                    arm.name, self.signal.length
                )));
            }
        }
        if let Some((_, values)) = &self.sweep {
            check_sweep_values(values)?;
        }
        Ok(())
    }

    /// Parses the `key = value` format documented at module level. Missing
    /// keys keep their defaults; at least one `[solver.<arm>]` section
    /// replaces the default arms.
    pub fn parse(text: &str) -> Result<Self> {
        let sections = split_sections(text)?;
        let mut cfg = ExperimentConfig::default();
        let mut arms = Vec::new();
        let mut tau_explicit = None;
        let (mut tau_min, mut tau_max, mut tau_points) = (1e-3, 1e3, 12usize);

        for (name, entries) in &sections {
            let mut kv = Entries::new(name, entries);
            match name.as_str() {
                "signal" => {
                    let s = &mut cfg.signal;
                    let kind = kv.take("kind")?.unwrap_or_else(|| "piecewise-constant".to_string());
                    let segments: usize = kv.parse_or("segments", 8)?;
                    s.length = kv.parse_or("length", s.length)?;
                    s.intensity = kv.parse_or("intensity", s.intensity)?;
                    s.seed = kv.parse_or("seed", s.seed)?;
                    s.kind = match kind.as_str() {
                        "constant" => SignalKind::Constant,
                        "piecewise-constant" => SignalKind::PiecewiseConstant { segments },
                        "piecewise-smooth" => SignalKind::PiecewiseSmooth { segments },
                        "compressible" => SignalKind::Compressible {
                            alpha: kv.parse_or("alpha", 1.0)?,
                            rho: kv.parse_or("rho", 0.1)?,
                            c: kv.parse_or("c", 0.0)?,
                            basis: match kv.take("basis")?.as_deref() {
                                None | Some("haar") => Basis::Haar,
                                Some("identity") => Basis::Identity,
                                Some(other) => {
                                    return Err(kv.error(format!("unknown basis {other:?}")))
                                }
                            },
                        },
                        other => return Err(kv.error(format!("unknown signal kind {other:?}"))),
                    };
                }
                "matrix" => {
                    let m = &mut cfg.matrix;
                    m.rows = kv.parse_or("rows", m.rows)?;
                    m.seed = kv.parse_or("seed", m.seed)?;
                    let w: Option<usize> = kv.parse_opt("row_weight")?;
                    let p: Option<f64> = kv.parse_opt("p")?;
                    m.scheme = match (w, p) {
                        (Some(_), Some(_)) => {
                            return Err(kv.error("give either row_weight or p, not both".into()))
                        }
                        (Some(w), None) => RowScheme::FixedRowWeight { w },
                        (None, Some(p)) => RowScheme::IidBernoulli { p },
                        (None, None) => m.scheme,
                    };
                }
                "sweep" => {
                    cfg.replicates = kv.parse_or("replicates", cfg.replicates)?;
                    cfg.noise_seed = kv.parse_or("noise_seed", cfg.noise_seed)?;
                    if let Some(list) = kv.take("tau")? {
                        tau_explicit = Some(parse_list(&list).map_err(|e| kv.error(e))?);
                    }
                    tau_min = kv.parse_or("tau_min", tau_min)?;
                    tau_max = kv.parse_or("tau_max", tau_max)?;
                    tau_points = kv.parse_or("tau_points", tau_points)?;
                    let axis: Option<SweepAxis> = kv.parse_opt("axis")?;
                    let values = kv.take("values")?;
                    cfg.sweep = match (axis, values) {
                        (Some(a), Some(v)) => Some((a, parse_list(&v).map_err(|e| kv.error(e))?)),
                        (None, None) => None,
                        _ => return Err(kv.error("axis and values must be given together".into())),
                    };
                }
                s if s.starts_with("solver.") => {
                    let arm_name = &s["solver.".len()..];
                    if arm_name.is_empty() {
                        return Err(kv.error("empty arm name".into()));
                    }
                    let penalty = match kv.take("penalty")? {
                        Some(p) => p.parse().map_err(|e: PcsError| kv.error(e.to_string()))?,
                        None => arm_name.parse().map_err(|e: PcsError| kv.error(e.to_string()))?,
                    };
                    let d = SolverConfig::default();
                    let floor: Option<f64> = kv.parse_opt("log_floor")?;
                    let solver = SolverConfig {
                        tau: d.tau,
                        penalty,
                        leaf_cost: match kv.take("leaf_cost")?.as_deref() {
                            None | Some("codelength") => LeafCost::Codelength,
                            Some("raw") => LeafCost::Raw,
                            Some(other) => return Err(kv.error(format!("unknown leaf_cost {other:?}"))),
                        },
                        max_iters: kv.parse_or("max_iters", d.max_iters)?,
                        time_budget_seconds: kv.parse_or("time_budget", d.time_budget_seconds)?,
                        rel_obj_tol: kv.parse_or("tol", d.rel_obj_tol)?,
                        eta_min: kv.parse_or("eta_min", d.eta_min)?,
                        eta_max: kv.parse_or("eta_max", d.eta_max)?,
                        bb_enabled: kv.parse_or("bb", d.bb_enabled)?,
                        backtrack_factor: kv.parse_or("backtrack_factor", d.backtrack_factor)?,
                        max_backtracks: kv.parse_or("max_backtracks", d.max_backtracks)?,
                        renormalize_output: kv.parse_or("renormalize", d.renormalize_output)?,
                        log_floor: floor.map(LogFloor::Absolute),
                    };
                    arms.push(Arm {
                        name: arm_name.to_string(),
                        solver,
                    });
                }
                other => {
                    return Err(PcsError::Parse {
                        line: entries.first().map(|e| e.0).unwrap_or(0),
                        msg: format!("unknown section [{other}]"),
                    })
                }
            }
            kv.finish()?;
        }

        if !arms.is_empty() {
            cfg.arms = arms;
        }
        cfg.tau_grid = match tau_explicit {
            Some(t) => t,
            None => log_grid(tau_min, tau_max, tau_points),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn check_sweep_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(PcsError::invalid("sweep needs at least one value"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(PcsError::invalid("sweep values must be positive"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PcsError::invalid("sweep values must be strictly ascending"));
    }
    Ok(())
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

type SectionEntries = Vec<(usize, String, String)>;

fn split_sections(text: &str) -> Result<Vec<(String, SectionEntries)>> {
    let mut sections: Vec<(String, SectionEntries)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(PcsError::Parse {
                line: line_no,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim().to_string();
            if sections.iter().any(|(n, _)| *n == name) {
                return Err(PcsError::Parse {
                    line: line_no,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.push((name, Vec::new()));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(PcsError::Parse {
            line: line_no,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let current = sections.last_mut().ok_or(PcsError::Parse {
            line: line_no,
            msg: "key outside of any section".into(),
        })?;
        current.1.push((line_no, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(sections)
}

/// Consumes the keys of one section and reports leftovers as errors.
struct Entries<'a> {
    section: &'a str,
    map: BTreeMap<String, (usize, String)>,
    first_line: usize,
}

impl<'a> Entries<'a> {
    fn new(section: &'a str, entries: &'a SectionEntries) -> Self {
        Self {
            section,
            map: entries.iter().map(|(l, k, v)| (k.clone(), (*l, v.clone()))).collect(),
            first_line: entries.first().map(|e| e.0).unwrap_or(0),
        }
    }

    fn error(&self, msg: String) -> PcsError {
        PcsError::Parse {
            line: self.first_line,
            msg: format!("[{}] {msg}", self.section),
        }
    }

    fn take(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.map.remove(key).map(|(_, v)| v))
    }

    fn parse_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| PcsError::Parse {
                line,
                msg: format!("[{}] {key} = {v:?}: {e}", self.section),
            }),
        }
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(PcsError::Parse {
                line,
                msg: format!("[{}] unknown key {k:?}", self.section),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# paper-sized setup
[signal]
kind = piecewise-smooth
length = 256
intensity = 1e5
segments = 6
seed = 9

[matrix]
rows = 128
row_weight = 16
seed = 4

[solver.rdp]
max_iters = 50

[solver.fast-ti]
penalty = rdp-ti
tol = 1e-6
leaf_cost = raw

[sweep]
replicates = 2
noise_seed = 17
tau = 0.5, 1, 2
axis = I
values = 1e4, 1e5
";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.signal.kind, SignalKind::PiecewiseSmooth { segments: 6 });
        assert_eq!(cfg.signal.length, 256);
        assert_eq!(cfg.matrix.scheme, RowScheme::FixedRowWeight { w: 16 });
        assert_eq!(cfg.arms.len(), 2);
        assert_eq!(cfg.arms[0].solver.penalty, PenaltyKind::Rdp);
        assert_eq!(cfg.arms[0].solver.max_iters, 50);
        assert_eq!(cfg.arms[1].name, "fast-ti");
        assert_eq!(cfg.arms[1].solver.penalty, PenaltyKind::RdpTi);
        assert_eq!(cfg.arms[1].solver.leaf_cost, LeafCost::Raw);
        assert_eq!(cfg.tau_grid, vec![0.5, 1.0, 2.0]);
        assert_eq!(cfg.replicates, 2);
        assert_eq!(cfg.sweep, Some((SweepAxis::I, vec![1e4, 1e5])));
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(ExperimentConfig::parse("[signal]\nlenght = 8\n").is_err());
        assert!(ExperimentConfig::parse("[bogus]\nx = 1\n").is_err());
        assert!(ExperimentConfig::parse("x = 1\n").is_err());
        assert!(ExperimentConfig::parse("[matrix]\nrow_weight = 2\np = 0.5\n").is_err());
        assert!(ExperimentConfig::parse("[sweep]\naxis = I\nvalues = 2, 1\n").is_err());
        assert!(ExperimentConfig::parse("[signal]\nlength = 1000\n").is_err());
    }

    #[test]
    fn default_grid() {
        let g = log_grid(1e-3, 1e3, 12);
        assert_eq!(g.len(), 12);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[11] - 1e3).abs() < 1e-9);
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }
}
