//! Euclidean projection onto `C = {g ⪰ cI·1, Σ g = I}`.

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

/// Projects `g` onto `{x : x_i ≥ c·I, Σ x_i = I}` by water filling: the
/// result is `max(g − λ, cI)` with `λ` chosen so the entries sum to `I`.
pub fn project_onto_c<T: Scalar>(g: &[T], intensity: T, c: T) -> Result<Vec<T>> {
    let m = g.len();
    if m == 0 {
        return Err(PcsError::EmptyConstraintSet("zero-length vector".into()));
    }
    if !(intensity > T::zero()) {
        return Err(PcsError::invalid("intensity must be positive"));
    }
    if !(c >= T::zero()) || !(c * T::from_count(m) < T::one()) {
        return Err(PcsError::EmptyConstraintSet(format!(
            "c = {c} must satisfy 0 <= c < 1/m with m = {m}"
        )));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(PcsError::Domain("non-finite input".into()));
    }
    let floor = c * intensity;
    // Shifted problem: z = g − floor onto the simplex of radius I(1 − cm).
    let radius = intensity - floor * T::from_count(m);
    let mut sorted: Vec<T> = g.iter().map(|&x| x - floor).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));

    let mut cumsum = T::zero();
    let mut lambda = T::zero();
    for (j, &zj) in sorted.iter().enumerate() {
        cumsum += zj;
        let candidate = (cumsum - radius) / T::from_count(j + 1);
        if zj - candidate > T::zero() {
            lambda = candidate;
        }
    }
    Ok(g.iter()
        .map(|&x| (x - floor - lambda).max(T::zero()) + floor)
        .collect())
}
