//! Photon-limited compressed sensing.
//!
//! Feasible sensing matrices with entries in `{0, 1/N}`, Poisson measurement
//! simulation, penalized-likelihood reconstruction with partition-based and
//! ℓ1 penalties, and evaluators for the associated risk bounds.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod penalties;
pub mod rng;
pub mod scalar;
pub mod sensing;
pub mod signal;
pub mod spiral;
pub mod theory;

pub use error::{PcsError, Result};
pub use model::{CountVector, LogFloor};
pub use penalties::{Basis, LeafCost};
pub use scalar::Scalar;
pub use sensing::{RowScheme, SensingMatrix, ValidationReport};
pub use spiral::{PenaltyKind, SolverConfig, Termination};

pub type Signal = signal::Signal<f64>;
pub type Signal32 = signal::Signal<f32>;
pub type PartitionFit = penalties::PartitionFit<f64>;
pub type PartitionFit32 = penalties::PartitionFit<f32>;
pub type SolveTrace = spiral::SolveTrace<f64>;
pub type SolveTrace32 = spiral::SolveTrace<f32>;
pub type QuantizedCoeffs = penalties::QuantizedCoeffs<f64>;
