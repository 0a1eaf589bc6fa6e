use rand::seq::index::sample;
use rand::Rng;

use super::config::{SignalKind, SignalSpec};
use crate::error::{PcsError, Result};
use crate::rng::{substream, Domain};
use crate::signal::Signal;
use crate::theory::generate_compressible_signal;

/// Builds the test signal described by `spec`, normalized to its intensity.
///
/// Piecewise signals get `segments − 1` distinct random breakpoints and levels
/// uniform on `[0.1, 1)` before rescaling. The smooth variant replaces each
/// sample next to a breakpoint by the mean of itself and its two neighbours.
pub fn make_test_signal(spec: &SignalSpec) -> Result<Signal> {
    let m = spec.length;
    if m == 0 {
        return Err(PcsError::invalid("signal length must be positive"));
    }
    if !(spec.intensity > 0.0 && spec.intensity.is_finite()) {
        return Err(PcsError::invalid("signal intensity must be positive and finite"));
    }
    let values = match spec.kind {
        SignalKind::Constant => vec![1.0; m],
        SignalKind::PiecewiseConstant { segments } => piecewise(m, segments, spec.seed)?.0,
        SignalKind::PiecewiseSmooth { segments } => {
            let (v, breaks) = piecewise(m, segments, spec.seed)?;
            smooth_at(&v, &breaks)
        }
        SignalKind::Compressible { alpha, rho, c, basis } => {
            return Ok(
                generate_compressible_signal(m, alpha, rho, spec.intensity, c, basis, spec.seed)?.signal,
            )
        }
    };
    Signal::rescaled(values, spec.intensity)
}

fn piecewise(m: usize, segments: usize, seed: u64) -> Result<(Vec<f64>, Vec<usize>)> {
    if segments == 0 || segments > m {
        return Err(PcsError::invalid(format!(
            "need 1 <= segments <= length, got {segments} segments for length {m}"
        )));
    }
    let mut rng = substream(seed, Domain::Signal, 1);
    let mut breaks: Vec<usize> = if segments > 1 {
        sample(&mut rng, m - 1, segments - 1).into_iter().map(|b| b + 1).collect()
    } else {
        Vec::new()
    };
    breaks.sort_unstable();
    let mut values = Vec::with_capacity(m);
    let mut start = 0;
    for &end in breaks.iter().chain(std::iter::once(&m)) {
        let level = rng.gen_range(0.1..1.0);
        values.extend(std::iter::repeat_n(level, end - start));
        start = end;
    }
    Ok((values, breaks))
}

fn smooth_at(v: &[f64], breaks: &[usize]) -> Vec<f64> {
    let mut out = v.to_vec();
    let n = v.len();
    for &b in breaks {
        for i in [b - 1, b] {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            out[i] = (v[lo] + v[i] + v[hi]) / 3.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalties::Basis;

    fn spec(kind: SignalKind, length: usize, intensity: f64) -> SignalSpec {
        SignalSpec {
            kind,
            length,
            intensity,
            seed: 5,
        }
    }

    #[test]
    fn constant_signal() {
        let s = make_test_signal(&spec(SignalKind::Constant, 4, 8.0)).unwrap();
        assert_eq!(s.values(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn default_signal_shape() {
        let s = make_test_signal(&SignalSpec::default()).unwrap();
        assert_eq!(s.len(), 1024);
        let total: f64 = s.values().iter().sum();
        assert!((total - 8.2e5).abs() <= 1e-9 * 8.2e5);
        assert!(s.values().iter().all(|&v| v > 0.0));
        let jumps = s.values().windows(2).filter(|w| w[0] != w[1]).count();
        assert!(jumps <= 7);
    }

    #[test]
    fn every_kind_is_nonnegative_and_normalized() {
        let kinds = [
            SignalKind::Constant,
            SignalKind::PiecewiseConstant { segments: 5 },
            SignalKind::PiecewiseSmooth { segments: 5 },
            SignalKind::Compressible { alpha: 1.0, rho: 0.05, c: 0.0, basis: Basis::Haar },
        ];
        for kind in kinds {
            let s = make_test_signal(&spec(kind.clone(), 64, 1e4)).unwrap();
            let total: f64 = s.values().iter().sum();
            assert!((total - 1e4).abs() <= 1e-9 * 1e4, "{kind:?}");
            assert!(s.values().iter().all(|&v| v >= 0.0), "{kind:?}");
        }
    }

    #[test]
    fn smoothing_touches_only_boundaries() {
        let v = [1.0, 1.0, 1.0, 4.0, 4.0, 4.0];
        assert_eq!(smooth_at(&v, &[3]), vec![1.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn bad_specs() {
        assert!(make_test_signal(&spec(SignalKind::Constant, 0, 1.0)).is_err());
        assert!(make_test_signal(&spec(SignalKind::Constant, 4, 0.0)).is_err());
        assert!(make_test_signal(&spec(SignalKind::PiecewiseConstant { segments: 9 }, 8, 1.0)).is_err());
    }

    #[test]
    fn seeded() {
        let a = make_test_signal(&SignalSpec::default()).unwrap();
        let b = make_test_signal(&SignalSpec::default()).unwrap();
        assert_eq!(a, b);
        let c = make_test_signal(&SignalSpec { seed: 2, ..SignalSpec::default() }).unwrap();
        assert_ne!(a, c);
    }
}
