//! Dimension-reduced second-order optimization.
//!
//! The solver takes trust-region steps inside the two-dimensional subspace
//! spanned by the negative gradient and the previous step. Models come from
//! Hessian-vector products or from a handful of extra function values.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod corrector;
pub mod drsom;
pub mod error;
pub mod harness;
pub mod model;
pub mod problem;
pub mod problems;
pub mod report;
pub mod trs;

pub use drsom::{minimize, CorrectorPolicy, Mode, SolverConfig, SolverState};
pub use error::{Error, Result};
pub use model::{InterpScale, ModelMethod, QuadModel};
pub use problem::{EvalCounts, FnProblem, Objective, Problem};
pub use report::{RunReport, Status, TraceRecord};
