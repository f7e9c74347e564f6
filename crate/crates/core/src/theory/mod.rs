//! Closed-form stepsize and rate constants for IAG, and checks of the
//! associated inequalities against recorded traces.

pub mod arithmetic;
pub mod bounds;
mod certificate;
pub mod constants;
mod lemma1;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{
    error_bound_check, gd_contraction_check, iag_error_bound_rhs, iagm_error_bound_rhs,
    observed_rate, rate_bound_check, simple_error_bound_rhs, theorem1_check,
};
pub use certificate::{certificate, gd_certificate, GdCertificate, RateCertificate};
pub use lemma1::{lemma1_check, lemma1_rate, Lemma1Verdict};

/// Relative slack applied to every inequality check; covers rounding only.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("delay bound K = 0 has no IAG certificate; use the gradient descent certificate")]
    ZeroDelay,
    #[error("lemma does not apply: p + q = {0} is not below 1")]
    LemmaInapplicable(f64),
    #[error("distance window up to index {needed} unavailable ({available} recorded)")]
    WindowUnavailable { needed: usize, available: usize },
    #[error("trace was run at stepsize {actual}, not the certified {expected}")]
    WrongStepsize { expected: f64, actual: f64 },
    #[error("degenerate trace: {0}")]
    Degenerate(String),
}

/// Result of checking an inequality along a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Violated { k: usize },
}

impl Verdict {
    pub fn ok(self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn first_violation(self) -> Option<usize> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated { k } => Some(k),
        }
    }
}
