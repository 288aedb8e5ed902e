//! Information geometry of lumpable finite Markov kernels.
//!
//! This crate implements the dually flat geometry of irreducible row-stochastic
//! kernels over a strongly connected digraph, with a particular focus on
//! *lumping* (merging states through a surjective map) and the embeddings that
//! invert it:
//!
//! - [`kernel`] — irreducible kernels, stationary and edge measures, the
//!   divergence rate, entropy rate, reversiblizations, trajectory sampling.
//! - [`perron`] — Perron-Frobenius pairs and the stochastic rescaling map `𝔰`
//!   that turns a positive irreducible matrix into a kernel.
//! - [`lumping`] — lumping functions, lumpability tests, pushforwards, and the
//!   vector space of lumpable matrices with its explicit basis.
//! - [`embedding`] — Markov, memoryless, exponential, and Hudson embeddings,
//!   bistochastic/symmetric constructions, and trajectory-level simulation.
//! - [`geometry`] — e/m-families, e/m-geodesics, the Fisher metric and dual
//!   Christoffel symbols, quotient-space independence checks.
//! - [`projection`] — information projections onto linearly constrained sets
//!   via Lagrangian duality, closed-form m-projections, Pythagorean and
//!   four-point verifiers, maximum-entropy lifting.
//! - [`foliation`] — the leaf/base decomposition of lumpable kernels, leaf
//!   Pythagorean projection, Markov types and maximum likelihood estimation
//!   for embedded models.
//!
//! All types are immutable values after construction and every operation is a
//! pure function of its inputs plus an explicit seed where sampling is
//! involved, so values can be shared freely across threads.

pub mod embedding;
pub mod error;
pub mod foliation;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod lumping;
pub mod numeric;
pub mod optimize;
pub mod perron;
pub mod projection;
pub mod sample;

// STUBS-PENDING
pub use error::{Error, Result};
pub use graph::Digraph;
pub use kernel::{EdgeFn, EdgeMeasure, NonnegMatrix, StochasticKernel, Trajectory};
pub use lumping::{Lumping, LumpableBasis};
pub use perron::PfPair;

/// Default absolute tolerance on row sums of a stochastic kernel.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Default tolerance for the lumpability test, relative to a unit row sum.
pub const LUMPABILITY_TOL: f64 = 1e-9;
/// Pivot threshold for rank computations.
pub const RANK_TOL: f64 = 1e-10;
