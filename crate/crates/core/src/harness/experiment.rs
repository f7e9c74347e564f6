//! `run`, `compare` and `certify`.

use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;

use super::config::{MethodSetup, ProblemSpec, ResolvedExperiment};
use super::report::{CertifyReport, CheckResult, Comparison, IagVsIg, ProblemSummary, Report, RunSummary};
use super::HarnessError;
use crate::Problem;
use crate::solvers::{run, validate_schedule, Method, RunOptions, Schedule, ScheduleCheck, Trace};
use crate::theory::arithmetic::certificate_arithmetic;
use crate::theory::{self, bounds, certificate, constants, gd_certificate, RateCertificate, CHECK_SLACK};

/// Leading fraction of a trace ignored when fitting the observed rate.
const RATE_BURN_IN: f64 = 0.2;

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Trace<f64>,
    pub report: Report,
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub traces: Vec<Trace<f64>>,
    pub labels: Vec<String>,
    pub report: Report,
}

fn problem_summary(exp: &ResolvedExperiment) -> ProblemSummary {
    let p = &exp.problem;
    ProblemSummary {
        kind: match exp.config.problem {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Logistic { .. } => "logistic",
        }
        .into(),
        m: p.len(),
        n: p.dim(),
        mu: p.mu(),
        l: p.lipschitz(),
        q_cond: p.condition(),
        f_star: p.f_star(),
    }
}

/// Every inequality check applicable to `trace`, plus named placeholders for
/// the ones that are not.
pub fn run_checks(problem: &Problem, schedule: &Schedule, trace: &Trace<f64>) -> Vec<CheckResult> {
    let (mu, l) = (problem.mu(), problem.lipschitz());
    let k_delay = trace.delay_bound;
    let mut checks = Vec::new();
    let wrap = |name: &str, r: Result<theory::Verdict, theory::TheoryError>| match r {
        Ok(v) => CheckResult::from_verdict(name, v),
        Err(e) => CheckResult::errored(name, e),
    };

    if trace.method.is_aggregated() {
        checks.push(match validate_schedule(schedule, trace.final_k() + 1) {
            ScheduleCheck::Ok => CheckResult::passed("delay_bound", true, None),
            ScheduleCheck::Violation { k, i } => CheckResult {
                first_violation_k: Some(k),
                ..CheckResult::errored("delay_bound", format!("component {i} older than K"))
            },
        });
        checks.push(wrap(
            "error_bound_simple",
            bounds::error_bound_check(trace, |d, k| bounds::simple_error_bound_rhs(d, k, l, k_delay)),
        ));
        checks.push(match trace.method {
            Method::Iag => wrap(
                "error_bound_iag",
                bounds::error_bound_check(trace, |d, k| bounds::iag_error_bound_rhs(d, k, trace.gamma, l, k_delay)),
            ),
            _ => wrap(
                "error_bound_iagm",
                bounds::error_bound_check(trace, |d, k| {
                    bounds::iagm_error_bound_rhs(d, k, trace.gamma, trace.beta, l, k_delay)
                }),
            ),
        });
    } else {
        for name in ["delay_bound", "error_bound_simple"] {
            checks.push(CheckResult::skipped(name, format!("{} keeps no gradient table", trace.method)));
        }
    }

    let dist0 = trace.rows[0].dist;
    let rate_name = "rate_bound";
    match trace.method {
        Method::Iag if k_delay >= 1 => match certificate(mu, l, k_delay, Some(trace.gamma)) {
            Ok(cert) if cert.at_gamma_star() => checks.push(wrap(rate_name, bounds::theorem1_check(trace, &cert, dist0))),
            Ok(cert) if cert.s_below_one => checks.push(wrap(rate_name, bounds::rate_bound_check(trace, &cert))),
            Ok(cert) => checks.push(CheckResult::skipped(rate_name, format!("s(gamma) = {} is not below 1", cert.s))),
            Err(e) => checks.push(CheckResult::errored(rate_name, e)),
        },
        Method::Iag | Method::Gd => {
            if trace.gamma <= 2.0 / (mu + l) {
                let rate = constants::contraction_p(trace.gamma, mu, l).max(0.0).sqrt();
                let floor = 1e-12 * (1.0 + crate::linalg::norm(problem.x_star()));
                checks.push(CheckResult::from_verdict(
                    rate_name,
                    bounds::gd_contraction_check(&trace.dists(), rate, floor),
                ));
            } else {
                checks.push(CheckResult::skipped(rate_name, "stepsize above 2/(mu+L)"));
            }
        }
        Method::IagMomentum => checks.push(CheckResult::skipped(rate_name, "no explicit rate is certified with momentum")),
        Method::Ig | Method::IgMomentum => checks.push(CheckResult::skipped(
            rate_name,
            "incremental gradient with constant stepsize has no linear-rate guarantee",
        )),
    }
    checks
}

fn summarize(problem: &Problem, schedule: &Schedule, label: &str, trace: &Trace<f64>) -> RunSummary {
    let (mu, l) = (problem.mu(), problem.lipschitz());
    let checks = run_checks(problem, schedule, trace);
    let last = trace.final_row();
    let certificate = (trace.method.is_aggregated() && trace.delay_bound >= 1)
        .then(|| certificate(mu, l, trace.delay_bound, Some(trace.gamma)).ok())
        .flatten();
    RunSummary {
        label: label.into(),
        method: trace.method.name().into(),
        gamma: trace.gamma,
        beta: trace.beta,
        delay_bound: trace.delay_bound,
        final_k: last.k,
        converged: trace.converged,
        iterations_to_tolerance: trace.converged.then_some(last.k),
        final_dist: last.dist,
        final_cost_gap: last.cost_gap,
        final_grad_norm: last.agg_grad_norm,
        observed_rate: bounds::observed_rate(&trace.dists(), RATE_BURN_IN).ok(),
        certificate,
        gd_certificate: gd_certificate(mu, l).ok(),
        violations: checks.iter().filter(|c| !c.ok).count(),
        checks,
    }
}

fn execute(exp: &ResolvedExperiment, setup: &MethodSetup) -> Result<Trace<f64>, HarnessError> {
    let opts = RunOptions {
        method: setup.method,
        gamma: setup.gamma,
        beta: setup.beta,
        schedule: exp.schedule.clone(),
        stop: exp.stop,
    };
    Ok(run(&exp.problem, &opts, &exp.x0)?)
}

/// Runs the single method of a config and evaluates its checks.
pub fn run_experiment(exp: &ResolvedExperiment) -> Result<RunOutcome, HarnessError> {
    let [setup] = exp.methods.as_slice() else {
        return Err(HarnessError::Config(format!(
            "field `method`: `run` takes exactly one method, found {} (use `compare`)",
            exp.methods.len()
        )));
    };
    let start = Instant::now();
    let trace = execute(exp, setup)?;
    let summary = summarize(&exp.problem, &exp.schedule, setup.method.name(), &trace);
    let report = Report {
        command: "run".into(),
        config: exp.config.clone(),
        problem: problem_summary(exp),
        passed: summary.violations == 0,
        runs: vec![summary],
        comparison: None,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { trace, report })
}

fn labels_for(methods: &[MethodSetup]) -> Vec<String> {
    methods
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dup = methods.iter().filter(|o| o.method == s.method).count() > 1;
            if dup {
                format!("{}#{}", s.method.name(), i + 1)
            } else {
                s.method.name().to_string()
            }
        })
        .collect()
}

fn compare_summary(runs: &[RunSummary]) -> Comparison {
    let mut order: Vec<&RunSummary> = runs.iter().collect();
    order.sort_by(|a, b| {
        let key = |r: &RunSummary| r.iterations_to_tolerance.unwrap_or(usize::MAX);
        key(a).cmp(&key(b)).then(a.final_dist.total_cmp(&b.final_dist))
    });
    let find = |m: Method| runs.iter().find(|r| r.method == m.name());
    let iag_vs_ig = find(Method::Iag).zip(find(Method::Ig)).map(|(iag, ig)| IagVsIg {
        iag_reached_tolerance: iag.converged,
        iag_final_dist: iag.final_dist,
        ig_final_dist: ig.final_dist,
        ig_to_iag_dist_ratio: (iag.final_dist > 0.0).then(|| ig.final_dist / iag.final_dist),
    });
    Comparison {
        ranking: order.iter().map(|r| r.label.clone()).collect(),
        iag_vs_ig,
    }
}

/// Runs every listed method from the same start on the same problem.
pub fn compare(exp: &ResolvedExperiment) -> Result<CompareOutcome, HarnessError> {
    if exp.methods.len() < 2 {
        return Err(HarnessError::Config(format!(
            "field `methods`: `compare` needs at least two methods, found {}",
            exp.methods.len()
        )));
    }
    let start = Instant::now();
    let traces = exp
        .methods
        .par_iter()
        .map(|s| execute(exp, s))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = labels_for(&exp.methods);
    let runs: Vec<RunSummary> = traces
        .iter()
        .zip(&labels)
        .map(|(t, label)| summarize(&exp.problem, &exp.schedule, label, t))
        .collect();
    let report = Report {
        command: "compare".into(),
        config: exp.config.clone(),
        problem: problem_summary(exp),
        passed: runs.iter().all(|r| r.violations == 0),
        comparison: Some(compare_summary(&runs)),
        runs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(CompareOutcome { traces, labels, report })
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite inputs were validated")
}

/// Certificate for `(mu, L, K)` at `gamma` (default `γ*`, or `2/(mu+L)`
/// when `K = 0`), with its internal consistency checks.
pub fn certify(mu: f64, l: f64, k: usize, gamma: Option<f64>) -> Result<CertifyReport, HarnessError> {
    for (name, v) in [("mu", mu), ("L", l)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(HarnessError::Config(format!("--{name}: must be a positive number, got {v}")));
        }
    }
    if l < mu {
        return Err(HarnessError::Config(format!("--L: must be at least mu = {mu}, got {l}")));
    }
    if let Some(g) = gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(HarnessError::Config(format!("--gamma: must be positive, got {g}")));
        }
    }
    let gd = gd_certificate(mu, l)?;
    if k == 0 {
        let gamma = gamma.unwrap_or(gd.stepsize);
        let guaranteed = gamma <= gd.stepsize * (1.0 + CHECK_SLACK);
        let checks = vec![CheckResult::passed(
            "gd_rate_matches_p",
            ((constants::contraction_p(gd.stepsize, mu, l).max(0.0)).sqrt() - gd.per_step_rate).abs() <= 1e-12,
            None,
        )];
        return Ok(CertifyReport {
            mu,
            l,
            q_cond: l / mu,
            k,
            gamma,
            gamma_bar: None,
            gamma_star: None,
            c_k: None,
            per_step_bound: None,
            p: constants::contraction_p(gamma, mu, l),
            q: None,
            s: None,
            rho: None,
            linear_convergence_guaranteed: guaranteed,
            warning: (!guaranteed).then(|| "linear convergence not guaranteed: gamma above 2/(mu+L)".into()),
            gd_certificate: Some(gd),
            passed: checks.iter().all(|c| c.ok),
            checks,
        });
    }
    let cert: RateCertificate<f64> = certificate(mu, l, k, gamma)?;
    let mut checks: Vec<CheckResult> =
        certificate_arithmetic(exact(mu), exact(l), k, exact(cert.gamma), constants::perturbation_q)
            .into_iter()
            .map(|c| match c.holds {
                Some(h) => CheckResult::passed(c.name, h, Some("exact rational evaluation".into())),
                None => CheckResult::skipped(c.name, "hypothesis on gamma not met"),
            })
            .collect();
    let star = certificate(mu, l, k, None)?;
    checks.push(CheckResult::passed(
        "per_step_bound_in_unit_interval",
        star.per_step_bound > 0.0 && star.per_step_bound < 1.0,
        None,
    ));
    checks.push(match star.distance_rate() {
        Some(r) => CheckResult::passed(
            "rate_relaxation_at_gamma_star",
            r <= star.per_step_bound * (1.0 + CHECK_SLACK),
            Some(format!("s(gamma*)^(1/(2(2K+1))) = {r}")),
        ),
        None => CheckResult::errored("rate_relaxation_at_gamma_star", "s(gamma*) is not below 1"),
    });
    Ok(CertifyReport {
        mu,
        l,
        q_cond: cert.q_cond,
        k,
        gamma: cert.gamma,
        gamma_bar: Some(cert.gamma_bar),
        gamma_star: Some(cert.gamma_star),
        c_k: Some(cert.c_k),
        per_step_bound: Some(cert.per_step_bound),
        p: cert.p,
        q: Some(cert.q),
        s: Some(cert.s),
        rho: cert.rho,
        linear_convergence_guaranteed: cert.linear_convergence_guaranteed,
        warning: (!cert.linear_convergence_guaranteed)
            .then(|| "linear convergence not guaranteed: gamma is not below gamma_bar".into()),
        gd_certificate: Some(gd),
        passed: checks.iter().all(|c| c.ok),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentConfig;

    fn config(method: &str, gamma: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
seed = 11
[problem]
kind = "quadratic"
m = 3
n = 4
mu = 1.0
L = 3.0
[method]
name = "{method}"
gamma = {gamma}
[x0]
kind = "random"
[stop]
tolerance = 1e-10
max_iters = 300000
"#
        ))
        .unwrap()
    }

    #[test]
    fn gd_run_matches_its_certificate() {
        let exp = config("GD", "\"gd_optimal\"").resolve().unwrap();
        let out = run_experiment(&exp).unwrap();
        let run = &out.report.runs[0];
        assert!(out.report.passed && run.converged, "{run:?}");
        let q = exp.problem.condition();
        assert!(run.observed_rate.unwrap() <= (q - 1.0) / (q + 1.0) + 1e-6);
        assert!(run.checks.iter().any(|c| c.name == "rate_bound" && !c.skipped));
    }

    #[test]
    fn iag_run_at_gamma_star_passes_rate_check() {
        let exp = config("IAG", "\"gamma_star\"").resolve().unwrap();
        let out = run_experiment(&exp).unwrap();
        let run = &out.report.runs[0];
        assert!(run.converged && out.report.passed, "{:?}", run.checks);
        let names: Vec<_> = run.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["delay_bound", "error_bound_simple", "error_bound_iag", "rate_bound"]);
        assert!(run.checks.iter().all(|c| !c.skipped));
    }

    #[test]
    fn compare_iag_and_ig() {
        let mut cfg = config("IAG", "\"gamma_star\"");
        let ig = super::super::config::MethodSpec {
            name: Method::Ig,
            ..cfg.method.clone().unwrap()
        };
        cfg.methods.push(ig);
        cfg.stop.max_iters = 20_000;
        let out = compare(&cfg.resolve().unwrap()).unwrap();
        let cmp = out.report.comparison.unwrap();
        assert_eq!(cmp.ranking, ["IAG", "IG"]);
        let v = cmp.iag_vs_ig.unwrap();
        assert!(v.iag_reached_tolerance);
        assert!(v.ig_to_iag_dist_ratio.unwrap() >= 10.0);
        let ig_checks = &out.report.runs[1].checks;
        assert!(ig_checks.iter().all(|c| c.skipped));
    }

    #[test]
    fn single_method_compare_is_a_config_error() {
        let exp = config("IAG", "0.01").resolve().unwrap();
        assert_eq!(compare(&exp).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn certify_examples() {
        let c = certify(1.0, 1.0, 1, None).unwrap();
        assert_eq!(c.gamma_bar, Some(0.16));
        assert!((c.c_k.unwrap() - 2.0 / 75.0).abs() < 1e-17);
        assert!(c.passed && c.linear_convergence_guaranteed && c.warning.is_none());

        let c = certify(1.0, 10.0, 4, None).unwrap();
        assert_eq!(c.q_cond, 10.0);
        assert!((c.gamma_bar.unwrap() - 8.0 / 25.0 / 40.0 / 11.0).abs() < 1e-18);

        let c = certify(1.0, 1.0, 1, Some(0.2)).unwrap();
        assert!(!c.linear_convergence_guaranteed);
        assert!(c.warning.unwrap().contains("linear convergence not guaranteed"));
        assert!(c.passed);

        let c = certify(1.0, 3.0, 0, None).unwrap();
        assert_eq!(c.gd_certificate.unwrap().per_step_rate, 0.5);

        assert_eq!(certify(-1.0, 1.0, 1, None).unwrap_err().exit_code(), 2);
    }
}
