//! JSON documents written by the command line.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::theory::{GdCertificate, RateCertificate, Verdict};

/// Outcome of one named inequality check.
///
/// Checks that do not apply to a run are still listed, with `skipped` set
/// and the reason in `detail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub ok: bool,
    pub skipped: bool,
    pub first_violation_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn from_verdict(name: &str, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            ok: verdict.ok(),
            skipped: false,
            first_violation_k: verdict.first_violation(),
            detail: None,
        }
    }

    pub fn passed(name: &str, holds: bool, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            ok: holds,
            skipped: false,
            first_violation_k: None,
            detail,
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ok: true,
            skipped: true,
            first_violation_k: None,
            detail: Some(reason.into()),
        }
    }

    /// A check that could not be evaluated counts as failed.
    pub fn errored(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            ok: false,
            skipped: false,
            first_violation_k: None,
            detail: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Q")]
    pub q_cond: f64,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub method: String,
    pub gamma: f64,
    pub beta: f64,
    #[serde(rename = "K")]
    pub delay_bound: usize,
    pub final_k: usize,
    pub converged: bool,
    pub iterations_to_tolerance: Option<usize>,
    pub final_dist: f64,
    pub final_cost_gap: f64,
    pub final_grad_norm: f64,
    pub observed_rate: Option<f64>,
    pub certificate: Option<RateCertificate<f64>>,
    pub gd_certificate: Option<GdCertificate<f64>>,
    pub checks: Vec<CheckResult>,
    pub violations: usize,
}

/// Ranking and IAG-versus-IG verdict of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Labels ordered by iterations to tolerance; runs that never reached
    /// it come last, ordered by final distance.
    pub ranking: Vec<String>,
    pub iag_vs_ig: Option<IagVsIg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IagVsIg {
    pub iag_reached_tolerance: bool,
    pub iag_final_dist: f64,
    /// Distance at which IG stalled.
    pub ig_final_dist: f64,
    pub ig_to_iag_dist_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    pub problem: ProblemSummary,
    pub runs: Vec<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub passed: bool,
    pub wall_time_seconds: f64,
}

/// Output of `certify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Q")]
    pub q_cond: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub gamma: f64,
    pub gamma_bar: Option<f64>,
    pub gamma_star: Option<f64>,
    #[serde(rename = "c_K")]
    pub c_k: Option<f64>,
    pub per_step_bound: Option<f64>,
    pub p: f64,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub rho: Option<f64>,
    pub linear_convergence_guaranteed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub gd_certificate: Option<GdCertificate<f64>>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}
