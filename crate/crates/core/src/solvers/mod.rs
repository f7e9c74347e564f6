//! IAG and IAG-M iterations with their gradient table, plus the GD, IG and
//! IG-M baselines and an instrumented driver that records traces.

mod incremental;
mod run;
mod schedule;
mod state;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::ProblemError;

pub use incremental::{ig_step, igm_step};
pub use run::{run, RunOptions, StoppingRule};
pub use schedule::{validate_schedule, Schedule, ScheduleCheck};
pub use state::{gradient_error, iag_step, iagm_step, init_state, GradientTable, SolverState};
pub use trace::{write_combined_csv, Trace, TraceRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("refresh set of iteration {0} is empty")]
    EmptyRefresh(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("component index {index} out of range for {components} components")]
    IndexOutOfRange { index: usize, components: usize },
    #[error("iterates diverged after iteration {last_finite_k}")]
    Diverged { last_finite_k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "IAG")]
    Iag,
    #[serde(rename = "IAG-M")]
    IagMomentum,
    #[serde(rename = "IG")]
    Ig,
    #[serde(rename = "IG-M")]
    IgMomentum,
    #[serde(rename = "GD")]
    Gd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Iag,
        Method::IagMomentum,
        Method::Ig,
        Method::IgMomentum,
        Method::Gd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Iag => "IAG",
            Method::IagMomentum => "IAG-M",
            Method::Ig => "IG",
            Method::IgMomentum => "IG-M",
            Method::Gd => "GD",
        }
    }

    pub fn uses_momentum(self) -> bool {
        matches!(self, Method::IagMomentum | Method::IgMomentum)
    }

    /// Methods driven by a gradient table and a refresh schedule.
    pub fn is_aggregated(self) -> bool {
        matches!(self, Method::Iag | Method::IagMomentum)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method `{s}` (expected IAG, IAG-M, IG, IG-M or GD)"))
    }
}
