//! Denoising subproblem solvers and the coefficient-coding machinery used by
//! the risk bounds.

pub mod coding;
pub mod projection;
pub mod rdp;
pub mod wavelet;

pub use coding::{codelength_penalty, dequantize, kraft_sum_exhaustive, quantize_coeffs, QuantizedCoeffs};
pub use projection::project_onto_c;
pub use rdp::{
    dyadic_leaf_count, dyadic_leaf_count_ti, rdp_denoise, rdp_denoise_bounded, rdp_denoise_ti,
    rdp_denoise_ti_bounded, Leaf, LeafCost, PartitionFit, TiFit,
};
pub use wavelet::{soft_threshold, soft_threshold_basis, Basis};
