//! Experiment driver behind the `iag` command line: configuration files,
//! runs with their inequality checks, reports and the certification suite.

pub mod config;
mod experiment;
pub mod gradcheck;
pub mod report;
pub mod suite;

use thiserror::Error;

use crate::problems::ProblemError;
use crate::solvers::SolverError;
use crate::theory::TheoryError;

pub use config::{ExperimentConfig, ResolvedExperiment};
pub use experiment::{certify, compare, run_experiment, CompareOutcome, RunOutcome};
pub use gradcheck::{gradcheck, GradcheckReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Diverged(String),
    #[error(transparent)]
    Solver(SolverError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Diverged { last_finite_k } => HarnessError::Diverged(format!(
                "iterates diverged; last finite iteration k = {last_finite_k}"
            )),
            SolverError::Problem(p) => HarnessError::Problem(p),
            other => HarnessError::Solver(other),
        }
    }
}

impl HarnessError {
    /// Process exit status: 2 for invalid input, 3 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Problem(_)
            | HarnessError::Solver(SolverError::InvalidParameter(_))
            | HarnessError::Solver(SolverError::InvalidSchedule(_)) => 2,
            HarnessError::Diverged(_) => 3,
            _ => 1,
        }
    }
}
