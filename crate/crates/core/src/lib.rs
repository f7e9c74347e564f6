//! Incremental aggregated gradient (IAG) methods for strongly convex finite
//! sums, with explicit linear-rate certificates and trace-level checks of
//! the inequalities behind them.
//!
//! The numerical core is generic over [`Scalar`] (`f32`, `f64`); the rate
//! constants in [`theory::constants`] additionally evaluate in exact
//! rational arithmetic. The harness and CLI work in `f64`, see the aliases
//! below.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod linalg;
pub mod problems;
pub mod scalar;
pub mod solvers;
pub mod theory;

pub use scalar::Scalar;

pub type Problem = problems::Problem<f64>;
pub type Trace = solvers::Trace<f64>;
pub type TraceRow = solvers::TraceRow<f64>;
pub type SolverState = solvers::SolverState<f64>;
pub type RunOptions = solvers::RunOptions<f64>;
pub type StoppingRule = solvers::StoppingRule<f64>;
pub type RateCertificate = theory::RateCertificate<f64>;
