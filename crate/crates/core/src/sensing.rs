//! Positivity- and flux-preserving sensing matrices.
//!
//! A [`SensingMatrix`] has entries in `{0, 1/N}` and is stored as the sorted
//! column indices of the nonzero entries of each row. The zero-mean matrix
//! `Ã` it is derived from is never stored; [`implied_z`] recovers the
//! corresponding `Z = √N·Ã` entry from an entry of `A`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{check_len, PcsError, Result};
use crate::rng::{substream, Domain};
use crate::scalar::Scalar;

/// How the nonzero pattern of each row is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowScheme {
    /// Every entry is independently nonzero with probability `1 - p`.
    IidBernoulli { p: f64 },
    /// Every row holds exactly `w` distinct nonzero columns chosen uniformly.
    FixedRowWeight { w: usize },
}

impl fmt::Display for RowScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowScheme::IidBernoulli { .. } => write!(f, "bernoulli"),
            RowScheme::FixedRowWeight { w } => write!(f, "row-weight:{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    n_rows: usize,
    n_cols: usize,
    /// CSR row offsets into `cols`, length `n_rows + 1`.
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    p: f64,
    seed: u64,
    scheme: RowScheme,
}

/// Value of `Z` implied by an entry of `A` (`true` when the entry is `1/N`).
///
/// `Z = (N·A − (1−p)) / √(p(1−p))`, so a zero maps to `−√((1−p)/p)` and a
/// nonzero to `√(p/(1−p))`.
pub fn implied_z(nonzero: bool, p: f64) -> f64 {
    let a = if nonzero { 1.0 } else { 0.0 };
    (a - (1.0 - p)) / (p * (1.0 - p)).sqrt()
}

impl SensingMatrix {
    /// Draws a matrix. Row `i` is generated from its own substream, so the
    /// result depends only on `(n_rows, n_cols, scheme, seed)`.
    pub fn build(n_rows: usize, n_cols: usize, scheme: RowScheme, seed: u64) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(PcsError::invalid("matrix dimensions must be positive"));
        }
        if n_cols > u32::MAX as usize {
            return Err(PcsError::invalid("too many columns"));
        }
        let p = match scheme {
            RowScheme::IidBernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(PcsError::invalid(format!("p = {p} outside (0, 1)")));
                }
                p
            }
            RowScheme::FixedRowWeight { w } => {
                if w == 0 || w > n_cols {
                    return Err(PcsError::invalid(format!(
                        "row weight {w} outside 1..={n_cols}"
                    )));
                }
                1.0 - w as f64 / n_cols as f64
            }
        };

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for i in 0..n_rows {
            let mut rng = substream(seed, Domain::MatrixRow, i as u64);
            match scheme {
                RowScheme::IidBernoulli { p } => {
                    for j in 0..n_cols {
                        if rng.gen::<f64>() >= p {
                            cols.push(j as u32);
                        }
                    }
                }
                RowScheme::FixedRowWeight { w } => {
                    cols.extend(floyd_sample(&mut rng, n_cols, w));
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            p,
            seed,
            scheme,
        })
    }

    /// Builds a matrix from explicit row patterns (used for hand-made
    /// instances and file loading).
    pub fn from_rows(
        n_cols: usize,
        rows: Vec<Vec<u32>>,
        scheme: RowScheme,
        seed: u64,
    ) -> Result<Self> {
        if rows.is_empty() || n_cols == 0 {
            return Err(PcsError::invalid("matrix dimensions must be positive"));
        }
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PcsError::invalid(format!("row {i} is not strictly ascending")));
            }
            if row.last().is_some_and(|&j| j as usize >= n_cols) {
                return Err(PcsError::invalid(format!("row {i} has a column index >= {n_cols}")));
            }
            if let RowScheme::FixedRowWeight { w } = scheme {
                if row.len() != w {
                    return Err(PcsError::invalid(format!(
                        "row {i} has {} entries, expected {w}",
                        row.len()
                    )));
                }
            }
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let p = match scheme {
            RowScheme::IidBernoulli { p } => p,
            RowScheme::FixedRowWeight { w } => 1.0 - w as f64 / n_cols as f64,
        };
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            p,
            seed,
            scheme,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Probability of a zero entry (implied `1 - w/m` for fixed row weight).
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scheme(&self) -> RowScheme {
        self.scheme
    }

    /// Sorted nonzero column indices of row `i`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Value of every stored entry.
    pub fn entry_value<T: Scalar>(&self) -> T {
        T::one() / T::from_count(self.n_rows)
    }

    /// Number of nonzeros in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for &j in &self.cols {
            counts[j as usize] += 1;
        }
        counts
    }

    /// `Af`, each row summed in ascending column order.
    pub fn apply<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        check_len(self.n_cols, f.len())?;
        let n = T::from_count(self.n_rows);
        Ok(self
            .rows()
            .map(|row| row.iter().fold(T::zero(), |acc, &j| acc + f[j as usize]) / n)
            .collect())
    }

    /// `Aᵀv`, accumulated over rows in ascending order.
    pub fn apply_adjoint<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.n_rows, v.len())?;
        let mut out = vec![T::zero(); self.n_cols];
        for (row, &vi) in self.rows().zip(v) {
            for &j in row {
                out[j as usize] += vi;
            }
        }
        let n = T::from_count(self.n_rows);
        for o in &mut out {
            *o /= n;
        }
        Ok(out)
    }

    /// Checks the structural and physical properties of the matrix on
    /// `trials` random nonnegative inputs.
    pub fn validate(&self, trials: usize, seed: u64) -> Result<ValidationReport> {
        if trials == 0 {
            return Err(PcsError::invalid("validation needs at least one trial"));
        }
        let empty_rows: Vec<usize> = (0..self.n_rows).filter(|&i| self.row(i).is_empty()).collect();
        let column_bound = self.column_counts().into_iter().max().unwrap_or(0) as f64
            / self.n_rows as f64;

        let mut max_flux_ratio: f64 = 0.0;
        let mut min_measurement_ratio = f64::INFINITY;
        for t in 0..trials {
            let mut rng = substream(seed, Domain::FluxCheck, t as u64);
            // Mix dense and sparse inputs so both regimes are exercised.
            let density = if t % 2 == 0 { 1.0 } else { 0.05 };
            let f: Vec<f64> = (0..self.n_cols)
                .map(|_| {
                    let keep = rng.gen::<f64>() < density;
                    if keep {
                        rng.gen::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = f.iter().sum();
            if total > 0.0 {
                let af = self.apply(&f)?;
                let ratio = af.iter().sum::<f64>() / total;
                max_flux_ratio = max_flux_ratio.max(ratio);
            }

            // Inputs bounded below by cI: f_j = floor + extra_j.
            let mut rng = substream(seed, Domain::MinMeasurementCheck, t as u64);
            let floor = rng.gen_range(0.01..1.0);
            let g: Vec<f64> = (0..self.n_cols).map(|_| floor + rng.gen::<f64>()).collect();
            let min_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
            let ag = self.apply(&g)?;
            let bound = min_g / self.n_rows as f64;
            for (i, &a) in ag.iter().enumerate() {
                if !self.row(i).is_empty() {
                    min_measurement_ratio = min_measurement_ratio.min(a / bound);
                }
            }
        }

        Ok(ValidationReport {
            trials,
            all_rows_nonempty: empty_rows.is_empty(),
            empty_rows,
            max_flux_ratio,
            column_bound,
            flux_ok: max_flux_ratio <= 1.0 + FLUX_SLACK && column_bound <= 1.0,
            min_measurement_ratio,
            min_measurement_ok: min_measurement_ratio >= 1.0 - FLUX_SLACK,
        })
    }

    /// Writes the versioned line format: a header
    /// `pcs-matrix v1 N m p scheme seed` and one line of ascending column
    /// indices per row.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{MAGIC} {VERSION} {} {} {} {} {}",
            self.n_rows, self.n_cols, self.p, self.scheme, self.seed
        )?;
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (k, j) in row.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&j.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(PcsError::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let parse_err = |msg: String| PcsError::Parse { line: 1, msg };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != MAGIC {
            return Err(parse_err(format!("bad header {header:?}")));
        }
        if fields[1] != VERSION {
            return Err(parse_err(format!("unsupported version {}", fields[1])));
        }
        let n_rows: usize = fields[2].parse().map_err(|e| parse_err(format!("N: {e}")))?;
        let n_cols: usize = fields[3].parse().map_err(|e| parse_err(format!("m: {e}")))?;
        let p: f64 = fields[4].parse().map_err(|e| parse_err(format!("p: {e}")))?;
        let scheme = match fields[5] {
            "bernoulli" => RowScheme::IidBernoulli { p },
            s => match s.strip_prefix("row-weight:") {
                Some(w) => RowScheme::FixedRowWeight {
                    w: w.parse().map_err(|e| parse_err(format!("row weight: {e}")))?,
                },
                None => return Err(parse_err(format!("unknown scheme {s:?}"))),
            },
        };
        let seed: u64 = fields[6].parse().map_err(|e| parse_err(format!("seed: {e}")))?;

        let mut rows = Vec::with_capacity(n_rows);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if rows.len() == n_rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(PcsError::Parse {
                    line: k + 2,
                    msg: "more rows than declared".into(),
                });
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| PcsError::Parse {
                    line: k + 2,
                    msg: e.to_string(),
                })?;
            rows.push(row);
        }
        if rows.len() != n_rows {
            return Err(PcsError::Parse {
                line: rows.len() + 2,
                msg: format!("expected {n_rows} rows, found {}", rows.len()),
            });
        }
        Self::from_rows(n_cols, rows, scheme, seed)
    }
}

const MAGIC: &str = "pcs-matrix";
const VERSION: &str = "v1";

/// Floating-point slack allowed on the flux and minimum-measurement checks.
pub const FLUX_SLACK: f64 = 1e-12;

/// Floyd's algorithm: `w` distinct values from `0..n`, returned sorted.
fn floyd_sample<R: Rng>(rng: &mut R, n: usize, w: usize) -> Vec<u32> {
    let mut chosen = BTreeSet::new();
    for j in (n - w)..n {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t as u32) {
            chosen.insert(j as u32);
        }
    }
    chosen.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub trials: usize,
    pub all_rows_nonempty: bool,
    pub empty_rows: Vec<usize>,
    /// Largest `‖Af‖₁/‖f‖₁` seen over the random inputs.
    pub max_flux_ratio: f64,
    /// `max_j (column j count)/N`, the exact supremum of the flux ratio.
    pub column_bound: f64,
    pub flux_ok: bool,
    /// Smallest `(Af)_i / (min_j f_j / N)` over nonempty rows.
    pub min_measurement_ratio: f64,
    pub min_measurement_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.all_rows_nonempty && self.flux_ok && self.min_measurement_ok
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials                 {}", self.trials)?;
        writeln!(f, "all rows nonempty      {} ({} empty)", self.all_rows_nonempty, self.empty_rows.len())?;
        writeln!(f, "max flux ratio         {:.15} (column bound {:.6})", self.max_flux_ratio, self.column_bound)?;
        writeln!(f, "flux preserving        {}", self.flux_ok)?;
        write!(f, "min measurement ratio  {:.6} ok={}", self.min_measurement_ratio, self.min_measurement_ok)
    }
}
