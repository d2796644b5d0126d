//! Lossy optical line with nonlinear-loop-mirror regenerators, simulated as
//! a Markov chain on photon-number distributions.
//!
//! * [`fock`]: number distributions, Poisson and thinning kernels.
//! * [`regen`]: the regenerator kernel, its working point and the chain.
//! * [`oracle`]: brute-force density-matrix channels for cross-checks.
//! * [`analysis`]: BER curves, linear-regime and coefficient-law fits,
//!   dephasing statistics.
//! * [`wigner`]: phase-space grids of the regenerated mixture.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fock;
pub mod oracle;
mod par;
pub mod regen;
mod special;
pub mod sum;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{
    apply_kernel, coherent_number_distribution, compose, compose_truncated, poisson_log_pmf, thinning_kernel,
    PhotonNumberDistribution, TransitionKernel,
};
pub use num_complex::Complex64;
pub use regen::{
    build_regen_kernel, composite_step_kernel, iterate_chain, iterate_chain_from, optimal_config,
    output_components, regen_mean, ChainConfig, ChainResult, ComponentMixture, RegeneratorConfig,
};
