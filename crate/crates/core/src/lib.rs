//! Fast repeated approximate sampling from strongly Rayleigh distributions:
//! k-DPPs and weighted random spanning trees.
//!
//! The cost of drawing many samples is dominated by how much of the ground
//! set each draw touches. This crate cuts that down by a
//! preprocess-then-sparsify pipeline:
//!
//! 1. estimate marginal overestimates q with a recursive counting scheme
//!    ([`isotropy::estimate_overestimates`]),
//! 2. subdivide high-marginal elements into copies so the subdivided law is
//!    nearly isotropic ([`isotropy::build_copy_map`]),
//! 3. run a down-up walk whose rounds resample inside uniformly random
//!    domains of size t = O(sum of q), not n ([`sparsifier::draw_samples`]).
//!
//! Everything is verified against brute-force enumeration oracles at small
//! sizes ([`model::enumerate_distribution`]); the numeric core is generic
//! over the scalar type through [`scalar::Real`], with f64 as the default
//! and f32 available for memory-bound workloads.

pub mod cli;
pub mod dpp;
pub mod error;
pub mod io;
pub mod isotropy;
pub mod model;
pub mod scalar;
pub mod spanning_tree;
pub mod sparsifier;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

/// The f64 instantiations most callers want.
pub type Kernel = dpp::KernelMatrix<f64>;
pub type Dpp = dpp::KdppModel<f64>;
pub type Graph = spanning_tree::WeightedGraph<f64>;
pub type Overestimates = isotropy::MarginalOverestimates<f64>;
pub type Config = sparsifier::SparsifierConfig<f64>;
pub type Table = model::ExactTable<f64>;
