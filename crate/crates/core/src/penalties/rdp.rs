//! Recursive dyadic partition (RDP) denoising by bottom-up tree pruning.
//!
//! Each node of the binary dyadic tree over `0..n` carries the mean and the
//! centered sum of squares of the data under it; statistics of a parent are
//! merged from its two children, so every shift of the translation-invariant
//! variant reuses exactly the same per-node arithmetic.

use std::fmt;

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

/// Per-leaf complexity charged by the partition penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafCost {
    /// One unit per leaf.
    Raw,
    /// `log₂(n)` bits per leaf, expressed in nats: `ln n`.
    #[default]
    Codelength,
}

impl LeafCost {
    /// Penalty per leaf for a signal of length `n`.
    pub fn per_leaf<T: Scalar>(self, n: usize) -> T {
        match self {
            LeafCost::Raw => T::one(),
            LeafCost::Codelength => T::from_count(n).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf<T: Scalar = f64> {
    pub start: usize,
    pub len: usize,
    pub level: T,
}

/// A pruned dyadic partition with one constant level per leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionFit<T: Scalar = f64> {
    pub n: usize,
    pub leaves: Vec<Leaf<T>>,
    /// `Σ_leaf Σ_{i∈leaf} (v_i − level)² + γ·leaves`.
    pub cost: T,
}

impl<T: Scalar> PartitionFit<T> {
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// The piecewise-constant estimate.
    pub fn to_vector(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for leaf in &self.leaves {
            out[leaf.start..leaf.start + leaf.len].fill(leaf.level);
        }
        out
    }
}

/// One `start length level` line per leaf.
impl<T: Scalar> fmt::Display for PartitionFit<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for leaf in &self.leaves {
            writeln!(f, "{} {} {}", leaf.start, leaf.len, leaf.level)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Node<T> {
    mean: T,
    /// Centered sum of squares.
    m2: T,
    cost: T,
    prune: bool,
    leaves: usize,
}

fn leaf_level<T: Scalar>(mean: T, lower: Option<T>) -> T {
    match lower {
        Some(lb) if mean < lb => lb,
        _ => mean,
    }
}

#[inline]
fn leaf_node<T: Scalar>(value: T, gamma: T, lower: Option<T>) -> Node<T> {
    let level = leaf_level(value, lower);
    let d = value - level;
    Node {
        mean: value,
        m2: T::zero(),
        cost: d * d + gamma,
        prune: true,
        leaves: 1,
    }
}

/// Merges two equal-size children of size `half` each.
#[inline]
fn merge<T: Scalar>(left: &Node<T>, right: &Node<T>, half: T, gamma: T, lower: Option<T>) -> Node<T> {
    let two = T::one() + T::one();
    let delta = right.mean - left.mean;
    let mean = left.mean + delta / two;
    let m2 = left.m2 + right.m2 + delta * delta * half / two;
    let level = leaf_level(mean, lower);
    let shift = mean - level;
    let leaf_cost = m2 + two * half * shift * shift + gamma;
    let split_cost = left.cost + right.cost;
    if leaf_cost <= split_cost {
        Node {
            mean,
            m2,
            cost: leaf_cost,
            prune: true,
            leaves: 1,
        }
    } else {
        Node {
            mean,
            m2,
            cost: split_cost,
            prune: false,
            leaves: left.leaves + right.leaves,
        }
    }
}

fn check_input<T: Scalar>(v: &[T], gamma: T) -> Result<()> {
    if v.is_empty() || !v.len().is_power_of_two() {
        return Err(PcsError::NotPowerOfTwo(v.len()));
    }
    if !(gamma >= T::zero()) {
        return Err(PcsError::invalid(format!("gamma = {gamma} must be nonnegative")));
    }
    Ok(())
}

/// Exact minimizer of `Σ(v_i − f_i)² + γ·leaves(f)` over piecewise-constant
/// `f` on pruned dyadic partitions. Ties prefer the pruned node.
pub fn rdp_denoise<T: Scalar>(v: &[T], gamma: T) -> Result<PartitionFit<T>> {
    rdp_denoise_bounded(v, gamma, None)
}

/// As [`rdp_denoise`] with every leaf level constrained to `≥ lower`.
pub fn rdp_denoise_bounded<T: Scalar>(v: &[T], gamma: T, lower: Option<T>) -> Result<PartitionFit<T>> {
    check_input(v, gamma)?;
    let n = v.len();
    // levels[0] holds the singletons, levels[J] the root.
    let mut levels: Vec<Vec<Node<T>>> = vec![v.iter().map(|&x| leaf_node(x, gamma, lower)).collect()];
    let mut half = 1usize;
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let h = T::from_count(half);
        let next = prev
            .chunks_exact(2)
            .map(|pair| merge(&pair[0], &pair[1], h, gamma, lower))
            .collect();
        levels.push(next);
        half *= 2;
    }

    let depth = levels.len() - 1;
    let mut leaves = Vec::with_capacity(levels[depth][0].leaves);
    collect_leaves(&levels, depth, 0, lower, &mut leaves);
    Ok(PartitionFit {
        n,
        leaves,
        cost: levels[depth][0].cost,
    })
}

fn collect_leaves<T: Scalar>(
    levels: &[Vec<Node<T>>],
    depth: usize,
    index: usize,
    lower: Option<T>,
    out: &mut Vec<Leaf<T>>,
) {
    let node = &levels[depth][index];
    if node.prune {
        let len = 1 << depth;
        out.push(Leaf {
            start: index * len,
            len,
            level: leaf_level(node.mean, lower),
        });
    } else {
        collect_leaves(levels, depth - 1, 2 * index, lower, out);
        collect_leaves(levels, depth - 1, 2 * index + 1, lower, out);
    }
}

/// Output of the translation-invariant denoiser.
#[derive(Debug, Clone, PartialEq)]
pub struct TiFit<T: Scalar = f64> {
    pub values: Vec<T>,
    /// Leaf count of the pruned partition, averaged over the `n` shifts.
    pub mean_leaf_count: T,
}

/// Cycle-spun RDP denoiser: the average over all `n` circular shifts `s` of
/// `unshift_s(rdp_denoise(shift_s(v)))`, with `shift_s(v)[i] = v[(i+s) mod n]`.
pub fn rdp_denoise_ti<T: Scalar>(v: &[T], gamma: T) -> Result<Vec<T>> {
    Ok(rdp_denoise_ti_bounded(v, gamma, None)?.values)
}

/// Translation-invariant denoiser with leaf levels constrained to `≥ lower`.
///
/// Across all shifts the tree nodes of length `L` are exactly the `n`
/// circular intervals of length `L`, and a node's pruning decision depends
/// only on the data it covers. The decisions are therefore computed once per
/// circular interval; each shift then walks its own pruned tree and
/// accumulates its leaf levels in ascending shift order.
pub fn rdp_denoise_ti_bounded<T: Scalar>(v: &[T], gamma: T, lower: Option<T>) -> Result<TiFit<T>> {
    check_input(v, gamma)?;
    let n = v.len();
    // nodes[d][a]: circular interval starting at a with length 2^d.
    let mut nodes: Vec<Vec<Node<T>>> = vec![v.iter().map(|&x| leaf_node(x, gamma, lower)).collect()];
    let mut half = 1usize;
    while half < n {
        let prev = nodes.last().unwrap();
        let h = T::from_count(half);
        let next = (0..n)
            .map(|a| merge(&prev[a], &prev[(a + half) % n], h, gamma, lower))
            .collect();
        nodes.push(next);
        half *= 2;
    }
    let depth = nodes.len() - 1;

    let mut acc = vec![T::zero(); n];
    let mut total_leaves = 0usize;
    let mut stack = Vec::with_capacity(2 * depth + 2);
    for s in 0..n {
        total_leaves += nodes[depth][s].leaves;
        stack.clear();
        stack.push((depth, s));
        while let Some((d, a)) = stack.pop() {
            let node = &nodes[d][a];
            if node.prune {
                let level = leaf_level(node.mean, lower);
                let len = 1usize << d;
                for t in 0..len {
                    acc[(a + t) % n] += level;
                }
            } else {
                let h = 1usize << (d - 1);
                stack.push((d - 1, (a + h) % n));
                stack.push((d - 1, a));
            }
        }
    }
    let nt = T::from_count(n);
    for x in &mut acc {
        *x /= nt;
    }
    Ok(TiFit {
        values: acc,
        mean_leaf_count: T::from_count(total_leaves) / nt,
    })
}

/// Smallest number of dyadic leaves on which `f` is exactly constant.
pub fn dyadic_leaf_count<T: Scalar>(f: &[T]) -> Result<usize> {
    if f.is_empty() || !f.len().is_power_of_two() {
        return Err(PcsError::NotPowerOfTwo(f.len()));
    }
    // (constant value if the node is a single leaf, leaf count)
    let mut level: Vec<(Option<T>, usize)> = f.iter().map(|&x| (Some(x), 1)).collect();
    while level.len() > 1 {
        level = level.chunks_exact(2).map(|p| merge_count(p[0], p[1])).collect();
    }
    Ok(level[0].1)
}

fn merge_count<T: Scalar>(l: (Option<T>, usize), r: (Option<T>, usize)) -> (Option<T>, usize) {
    match (l.0, r.0) {
        (Some(a), Some(b)) if a == b => (Some(a), 1),
        _ => (None, l.1 + r.1),
    }
}

/// [`dyadic_leaf_count`] averaged over all circular shifts of `f`.
pub fn dyadic_leaf_count_ti<T: Scalar>(f: &[T]) -> Result<T> {
    let n = f.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(PcsError::NotPowerOfTwo(n));
    }
    let mut level: Vec<(Option<T>, usize)> = f.iter().map(|&x| (Some(x), 1)).collect();
    let mut half = 1;
    while half < n {
        level = (0..n).map(|a| merge_count(level[a], level[(a + half) % n])).collect();
        half *= 2;
    }
    let total: usize = level.iter().map(|x| x.1).sum();
    Ok(T::from_count(total) / T::from_count(n))
}
