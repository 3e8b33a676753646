//! Modality-aware distributionally robust learning.
//!
//! This crate contains the algorithmic core of the `modro` toolkit:
//!
//! - [`dataset`]: multimodal datasets stored as per-modality blocks plus a
//!   target vector, with index-based splitting.
//! - [`synthetic`]: seeded generators for the simulation study, correlated
//!   Gaussian pairs, and two-point loss distributions.
//! - [`ambiguity`]: χ² and Wasserstein divergence machinery, including the
//!   correlation-aware ambiguity radius
//!   `B = Σ ρ_k + 2 Σ_{i<j} |γ_ij| √(ρ_i ρ_j)`.
//! - [`models`]: per-modality scalar encoders with a fusion head (late
//!   fusion), early-fusion models over the concatenation, OLS solvers, and
//!   small MLPs with backprop.
//! - [`dro`]: the closed-form χ²-DRO robust risk `E[ℓ] + √B · SD(ℓ)`, its
//!   per-sample gradient, ERM/DRO training loops, and Wasserstein-DRO linear
//!   regression via norm regularization.
//! - [`certificates`]: executable numerical bounds (generalization,
//!   encoder-robust, minimax lower) plus the empirical experiments that
//!   validate them.
//!
//! The crate is `no_std`-compatible (with `alloc`); IO, file formats, the
//! CLI, and the timing benchmarks live in the companion `modro` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ambiguity;
pub mod certificates;
pub mod dataset;
pub mod dro;
mod error;
pub(crate) mod float;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod synthetic;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
