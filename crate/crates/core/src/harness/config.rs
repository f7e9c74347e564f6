//! Declarative experiment files (TOML, one experiment per file).
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! kind = "quadratic"   # or "logistic"
//! m = 5
//! n = 10
//! mu = 1.0
//! L = 50.0
//!
//! [method]
//! name = "IAG"         # IAG | IAG-M | IG | IG-M | GD
//! gamma = "gamma_star" # "gamma_star" | "gd_optimal" | positive number
//! beta = 0.0
//!
//! [schedule]
//! kind = "cyclic"      # cyclic | full | adversarial (with K, optional seed)
//!
//! [x0]
//! kind = "random"      # zeros | random (with scale) | given (with values)
//!
//! [stop]
//! tolerance = 1e-10
//! max_iters = 1000000
//!
//! [output]
//! trace = "trace.csv"
//! report = "report.json"
//! ```
//!
//! Comparison files list several `[[methods]]` tables instead of `[method]`.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::problems::{load_labeled_csv, make_logistic_l2, make_quadratic_sum, Dataset};
use crate::Problem;
use crate::solvers::{Method, Schedule, StoppingRule};
use crate::theory::constants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub x0: StartSpec,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        m: usize,
        n: usize,
        mu: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    Logistic {
        m: usize,
        lambda: f64,
        /// CSV path, relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        /// Random data size when no file is given.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: Method,
    pub gamma: GammaSpec,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    #[default]
    Cyclic,
    Full,
    Adversarial {
        #[serde(rename = "K")]
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Zeros,
    Random {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Given {
        values: Vec<f64>,
    },
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    1_000_000
}

impl Default for StopSpec {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iters: default_max_iters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_trace")]
    pub trace: PathBuf,
    #[serde(default = "default_report")]
    pub report: PathBuf,
}

fn default_trace() -> PathBuf {
    "trace.csv".into()
}

fn default_report() -> PathBuf {
    "report.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trace: default_trace(),
            report: default_report(),
        }
    }
}

/// Sub-seed for one random element of an experiment.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const STREAM_PROBLEM: u64 = 1;
const STREAM_START: u64 = 2;
const STREAM_SCHEDULE: u64 = 3;
const STREAM_DATA: u64 = 4;

fn field_err(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("field `{field}`: {msg}"))
}

/// One method of an experiment with its stepsize resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSetup {
    pub method: Method,
    pub gamma: f64,
    pub gamma_spec: GammaSpec,
    pub beta: f64,
}

/// A validated experiment ready to execute.
#[derive(Debug)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub schedule: Schedule,
    pub x0: Vec<f64>,
    pub stop: StoppingRule<f64>,
    pub methods: Vec<MethodSetup>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file; relative data paths are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if let ProblemSpec::Logistic { data: Some(data), .. } = &mut cfg.problem {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    /// Methods listed in the file (`[method]` and `[[methods]]` combined).
    pub fn method_specs(&self) -> Vec<&MethodSpec> {
        self.method.iter().chain(&self.methods).collect()
    }

    fn build_problem(&self) -> Result<Problem, HarnessError> {
        match &self.problem {
            ProblemSpec::Quadratic { m, n, mu, l } => {
                if *m < 1 {
                    return Err(field_err("problem.m", "must be at least 1"));
                }
                if *n < 1 {
                    return Err(field_err("problem.n", "must be at least 1"));
                }
                if !(*mu > 0.0) {
                    return Err(field_err("problem.mu", "must be positive"));
                }
                if !(*l >= *mu) {
                    return Err(field_err("problem.L", "must be at least mu"));
                }
                Ok(make_quadratic_sum(derive_seed(self.seed, STREAM_PROBLEM), *m, *n, *mu, *l)?)
            }
            ProblemSpec::Logistic {
                m,
                lambda,
                data,
                samples,
                features,
            } => {
                if !(*lambda > 0.0) {
                    return Err(field_err("problem.lambda", "must be positive"));
                }
                let dataset = match data {
                    Some(path) => load_labeled_csv(path)?,
                    None => {
                        let (Some(samples), Some(features)) = (samples, features) else {
                            return Err(field_err(
                                "problem.data",
                                "give a data file or both `samples` and `features`",
                            ));
                        };
                        if *samples < *m || *features == 0 {
                            return Err(field_err("problem.samples", "need samples ≥ m and features ≥ 1"));
                        }
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_DATA));
                        Dataset::random(&mut rng, *samples, *features)
                    }
                };
                Ok(make_logistic_l2(&dataset, *lambda, *m)?)
            }
        }
    }

    fn build_schedule(&self, m: usize) -> Result<Schedule, HarnessError> {
        let schedule = match &self.schedule {
            ScheduleSpec::Cyclic => Schedule::cyclic(m),
            ScheduleSpec::Full => Schedule::full(m),
            ScheduleSpec::Adversarial { k, seed } => Schedule::adversarial(
                m,
                *k,
                seed.unwrap_or_else(|| derive_seed(self.seed, STREAM_SCHEDULE)),
            ),
        };
        schedule.map_err(|e| field_err("schedule", e))
    }

    fn build_start(&self, n: usize) -> Result<Vec<f64>, HarnessError> {
        match &self.x0 {
            StartSpec::Zeros => Ok(vec![0.0; n]),
            StartSpec::Random { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(field_err("x0.scale", "must be positive"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_START));
                Ok((0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
            }
            StartSpec::Given { values } => {
                if values.len() != n {
                    return Err(field_err(
                        "x0.values",
                        format!("expected {n} entries, got {}", values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(field_err("x0.values", "entries must be finite"));
                }
                Ok(values.clone())
            }
        }
    }

    fn resolve_method(
        spec: &MethodSpec,
        idx: usize,
        problem: &Problem,
        delay: usize,
    ) -> Result<MethodSetup, HarnessError> {
        let field = |f: &str| format!("methods[{idx}].{f}");
        let (mu, l) = (problem.mu(), problem.lipschitz());
        let aggregated_delay = if spec.name.is_aggregated() { delay } else { 0 };
        let gamma = match &spec.gamma {
            GammaSpec::Value(v) => {
                if !(*v > 0.0) || !v.is_finite() {
                    return Err(field_err(&field("gamma"), format!("must be positive, got {v}")));
                }
                *v
            }
            GammaSpec::Named(name) if name == "gamma_star" => {
                let k = match spec.name {
                    Method::Gd => 0,
                    Method::Ig | Method::IgMomentum => problem.len() - 1,
                    _ => delay,
                };
                if k < 1 {
                    return Err(field_err(&field("gamma"), "\"gamma_star\" requires K ≥ 1"));
                }
                constants::gamma_star(mu, l, k)
            }
            GammaSpec::Named(name) if name == "gd_optimal" => {
                if spec.name != Method::Gd && aggregated_delay != 0 {
                    return Err(field_err(&field("gamma"), "\"gd_optimal\" requires method GD or K = 0"));
                }
                2.0 / (mu + l)
            }
            GammaSpec::Named(other) => {
                return Err(field_err(
                    &field("gamma"),
                    format!("unknown stepsize `{other}` (expected a number, \"gamma_star\" or \"gd_optimal\")"),
                ))
            }
        };
        if !(spec.beta >= 0.0) || !spec.beta.is_finite() {
            return Err(field_err(&field("beta"), "must be nonnegative"));
        }
        if spec.beta != 0.0 && !spec.name.uses_momentum() {
            return Err(field_err(&field("beta"), format!("{} takes no momentum", spec.name)));
        }
        Ok(MethodSetup {
            method: spec.name,
            gamma,
            gamma_spec: spec.gamma.clone(),
            beta: spec.beta,
        })
    }

    /// Validates every field and builds the problem, schedule and start.
    pub fn resolve(&self) -> Result<ResolvedExperiment, HarnessError> {
        let specs = self.method_specs();
        if specs.is_empty() {
            return Err(field_err("method", "no method given"));
        }
        if !(self.stop.tolerance >= 0.0) {
            return Err(field_err("stop.tolerance", "must be nonnegative"));
        }
        let problem = self.build_problem()?;
        let schedule = self.build_schedule(problem.len())?;
        let x0 = self.build_start(problem.dim())?;
        let methods = specs
            .iter()
            .enumerate()
            .map(|(i, s)| Self::resolve_method(s, i, &problem, schedule.delay_bound()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResolvedExperiment {
            config: self.clone(),
            problem,
            schedule,
            x0,
            stop: StoppingRule {
                tolerance: self.stop.tolerance,
                max_iters: self.stop.max_iters,
            },
            methods,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
[problem]
kind = "quadratic"
m = 3
n = 4
mu = 1.0
L = 5.0
[method]
name = "IAG"
gamma = "gamma_star"
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        let exp = cfg.resolve().unwrap();
        assert_eq!(exp.schedule.delay_bound(), 2);
        let p = &exp.problem;
        assert_eq!(exp.methods[0].gamma, constants::gamma_star(p.mu(), p.lipschitz(), 2));
        assert_eq!(exp.x0, vec![0.0; 4]);
        assert_eq!(exp.stop.max_iters, 1_000_000);
    }

    #[test]
    fn numeric_gamma_and_adversarial_schedule() {
        let text = BASE.replace("\"gamma_star\"", "0.01")
            + "[schedule]\nkind = \"adversarial\"\nK = 6\n[x0]\nkind = \"random\"\nscale = 2.0\n";
        let exp = ExperimentConfig::from_toml(&text).unwrap().resolve().unwrap();
        assert_eq!(exp.methods[0].gamma, 0.01);
        assert_eq!(exp.schedule.delay_bound(), 6);
        let again = ExperimentConfig::from_toml(&text).unwrap().resolve().unwrap();
        assert_eq!(exp.x0, again.x0);
        assert_eq!(exp.schedule, again.schedule);
    }

    #[test]
    fn field_diagnostics() {
        let bad = BASE.replace("\"gamma_star\"", "-0.5");
        let err = ExperimentConfig::from_toml(&bad).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("methods[0].gamma"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let bad = BASE.replace("\"IAG\"", "\"GD\"");
        let err = ExperimentConfig::from_toml(&bad).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("requires K ≥ 1"), "{err}");

        let bad = BASE.replace("gamma_star", "gd_optimal");
        assert!(ExperimentConfig::from_toml(&bad).unwrap().resolve().is_err());

        let bad = BASE.replace("m = 3", "m = \"three\"");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");

        let bad = BASE.to_string() + "bogus = 1\n";
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn gd_optimal_allowed_with_full_schedule() {
        let text = BASE.replace("gamma_star", "gd_optimal") + "[schedule]\nkind = \"full\"\n";
        let exp = ExperimentConfig::from_toml(&text).unwrap().resolve().unwrap();
        let p = &exp.problem;
        assert_eq!(exp.methods[0].gamma, 2.0 / (p.mu() + p.lipschitz()));
    }

    #[test]
    fn seeds_drive_the_problem() {
        let a = ExperimentConfig::from_toml(BASE).unwrap().resolve().unwrap();
        let b = ExperimentConfig::from_toml(&BASE.replace("seed = 3", "seed = 4"))
            .unwrap()
            .resolve()
            .unwrap();
        assert_ne!(a.problem.x_star(), b.problem.x_star());
    }
}
