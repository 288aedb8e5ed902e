//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("empty matrix or graph")]
    Empty,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge ({0}, {1}) out of bounds for {2} vertices")]
    EdgeOutOfBounds(usize, usize, usize),

    #[error("support digraph is not strongly connected")]
    NotIrreducible,

    #[error("row {row} sums to {sum:.17} (deviation {dev:.3e} exceeds tolerance)")]
    RowNotStochastic { row: usize, sum: f64, dev: f64 },

    #[error("entry ({i}, {j}) = {value:.3e} conflicts with the declared support")]
    SupportMismatch { i: usize, j: usize, value: f64 },

    #[error("supports differ: operation requires support({left}) \u{2286} support({right})")]
    AbsoluteContinuity { left: String, right: String },

    #[error("edge-measure marginals differ by {gap:.3e} at state {state}")]
    MarginalMismatch { state: usize, gap: f64 },

    #[error(
        "kernel is not lumpable: rows {y1} and {y2} of block {x} disagree on block {x_prime} by {violation:.3e}"
    )]
    NotLumpable {
        x: usize,
        x_prime: usize,
        y1: usize,
        y2: usize,
        violation: f64,
    },

    #[error("lumping map is not surjective onto {0} classes")]
    NotSurjective(usize),

    #[error("lumping and edge set are incompatible: state {y} has no edge into block {x_prime}")]
    Incompatible { y: usize, x_prime: usize },

    #[error("power iteration did not converge within {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("optimizer stalled after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    OptimizerStalled { iterations: usize, grad_norm: f64 },

    #[error("dual problem is unbounded or infeasible: {0}")]
    UnboundedDual(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("family is invalid: {0}")]
    InvalidFamily(String),

    #[error("path space of order {order} exceeds the budget of {budget} states ({size} paths)")]
    PathBudgetExceeded {
        order: usize,
        budget: usize,
        size: usize,
    },

    #[error("numerical overflow or non-finite value in {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}
