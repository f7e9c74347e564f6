//! Acceptance suite: each criterion runs seeded experiments and checks a
//! stated inequality or identity at its stated tolerance.

use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradcheck::{gradcheck, GRADCHECK_POINTS};
use crate::linalg;
use crate::problems::{make_logistic_l2, make_quadratic_sum, two_eigenvalue_quadratic, Dataset};
use crate::solvers::{iag_step, iagm_step, init_state, run, Method, RunOptions, Schedule, StoppingRule};
use crate::theory::arithmetic::certificate_arithmetic;
use crate::theory::{self, bounds, constants, lemma1_check, Lemma1Verdict, CHECK_SLACK};
use crate::{Problem, Trace};

/// Wall-time budget for the whole suite, seconds.
pub const SUITE_TIME_BUDGET: f64 = 60.0;
/// Wall-time budget for the explicit-rate runs, seconds.
pub const RATE_RUNS_TIME_BUDGET: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub criteria: Vec<CriterionResult>,
    pub wall_time_seconds: f64,
    pub within_time_budget: bool,
    pub passed: bool,
}

impl SuiteReport {
    /// One `PASS`/`FAIL` line per criterion plus the wall-time line.
    pub fn lines(&self) -> Vec<String> {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut lines: Vec<String> = self
            .criteria
            .iter()
            .map(|c| format!("{} {:>2} {:<28} {:>6.2}s  {}", mark(c.passed), c.id, c.name, c.seconds, c.detail))
            .collect();
        lines.push(format!(
            "{} -- {:<28} {:>6.2}s  budget {SUITE_TIME_BUDGET} s",
            mark(self.within_time_budget),
            "suite wall time",
            self.wall_time_seconds
        ));
        lines
    }
}

/// A problem together with the run made on it.
struct Experiment {
    problem: Problem,
    trace: Trace,
}

fn x0_for(problem: &Problem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    problem.x_star().iter().map(|s| s + rng.gen_range(-1.0..1.0)).collect()
}

fn run_on(problem: Problem, opts: RunOptions<f64>, seed: u64) -> Experiment {
    let x0 = x0_for(&problem, seed);
    let trace = run(&problem, &opts, &x0).expect("suite runs are configured to be stable");
    Experiment { problem, trace }
}

fn gamma_star_of(problem: &Problem, k: usize) -> f64 {
    constants::gamma_star(problem.mu(), problem.lipschitz(), k)
}

// ---------------------------------------------------------------------------
// Run sets shared between criteria

/// 20 quadratics over `n ∈ {5, 20}`, `m ∈ {3, 10}`, target `Q ∈ {5, 50}`,
/// cyclic IAG at `γ*` for 10⁴ iterations.
fn rate_runs() -> Vec<Experiment> {
    (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let combo = seed as usize % 8;
            let n = [5, 20][combo & 1];
            let m = [3, 10][(combo >> 1) & 1];
            let q = [5.0, 50.0][(combo >> 2) & 1];
            let problem = make_quadratic_sum(100 + seed, m, n, 1.0, q).expect("valid generator input");
            let opts = RunOptions {
                method: Method::Iag,
                gamma: gamma_star_of(&problem, m - 1),
                beta: 0.0,
                schedule: Schedule::cyclic(m).expect("m ≥ 1"),
                stop: StoppingRule {
                    tolerance: 0.0,
                    max_iters: 10_000,
                },
            };
            run_on(problem, opts, seed)
        })
        .collect()
}

/// IAG at `γ*` under adversarial schedules holding every delay at `K`.
fn adversarial_runs() -> Vec<Experiment> {
    (0..4u64)
        .into_par_iter()
        .map(|seed| {
            let m = 4;
            let k = [3, 6][seed as usize % 2];
            let problem = make_quadratic_sum(200 + seed, m, 6, 1.0, 10.0).expect("valid generator input");
            let opts = RunOptions {
                method: Method::Iag,
                gamma: gamma_star_of(&problem, k),
                beta: 0.0,
                schedule: Schedule::adversarial(m, k, seed).expect("K + 1 ≥ m"),
                stop: StoppingRule {
                    tolerance: 0.0,
                    max_iters: 5_000,
                },
            };
            run_on(problem, opts, seed)
        })
        .collect()
}

/// Small well-conditioned quadratics on which `γ*` runs reach `dist ≤ 1e-8`
/// in reasonable time.
fn convergence_problem(seed: u64, m: usize) -> Problem {
    make_quadratic_sum(300 + seed, m, 5, 1.0, 2.0).expect("valid generator input")
}

const CONVERGENCE_STOP: StoppingRule<f64> = StoppingRule {
    tolerance: 1e-11,
    max_iters: 400_000,
};

/// IAG-M at `γ*` with `β ∈ {0, 0.05√γ*, 0.2√γ*}`.
fn momentum_runs() -> Vec<Experiment> {
    let cases: Vec<(u64, usize, f64)> = (0..3u64)
        .flat_map(|seed| [0.0, 0.05, 0.2].map(|b| (seed, [3, 5, 4][seed as usize], b)))
        .collect();
    cases
        .into_par_iter()
        .map(|(seed, m, b)| {
            let problem = convergence_problem(seed, m);
            let gamma = gamma_star_of(&problem, m - 1);
            let opts = RunOptions {
                method: Method::IagMomentum,
                gamma,
                beta: b * gamma.sqrt(),
                schedule: Schedule::cyclic(m).expect("m ≥ 1"),
                stop: CONVERGENCE_STOP,
            };
            run_on(problem, opts, seed)
        })
        .collect()
}

/// IAG and IG at the same `γ*` on `m = 5` quadratics.
fn iag_ig_runs() -> Vec<(Experiment, Experiment)> {
    (0..3u64)
        .into_par_iter()
        .map(|seed| {
            let m = 5;
            let make = |method| {
                let problem = convergence_problem(10 + seed, m);
                let opts = RunOptions {
                    method,
                    gamma: gamma_star_of(&problem, m - 1),
                    beta: 0.0,
                    schedule: Schedule::cyclic(m).expect("m ≥ 1"),
                    stop: CONVERGENCE_STOP,
                };
                run_on(problem, opts, seed)
            };
            (make(Method::Iag), make(Method::Ig))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Criteria

fn result(id: usize, name: &str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name: name.into(),
        passed,
        detail,
        seconds: 0.0,
    }
}

fn distance_rate(runs: &[Experiment], secs: f64) -> CriterionResult {
    let slack = 1.0 + CHECK_SLACK;
    let mut violations = 0;
    let mut checks_ok = true;
    let mut rows = 0;
    for e in runs {
        let cert = theory::certificate(e.problem.mu(), e.problem.lipschitz(), e.trace.delay_bound, None)
            .expect("valid certificate inputs");
        checks_ok &= bounds::theorem1_check(&e.trace, &cert, e.trace.rows[0].dist).is_ok_and(|v| v.ok());
        let d0 = e.trace.rows[0].dist;
        for r in &e.trace.rows {
            rows += 1;
            if r.dist > cert.per_step_bound.powi(r.k as i32) * d0 * slack {
                violations += 1;
            }
        }
    }
    let max_k = runs.iter().map(|e| e.trace.final_k()).min().unwrap_or(0);
    result(
        1,
        "distance rate at gamma*",
        violations == 0 && checks_ok && secs <= RATE_RUNS_TIME_BUDGET && max_k >= 10_000,
        format!("{} runs, {rows} rows, {violations} violations, {secs:.2} s of {RATE_RUNS_TIME_BUDGET} s", runs.len()),
    )
}

fn cost_rate(runs: &[Experiment]) -> CriterionResult {
    let slack = 1.0 + CHECK_SLACK;
    let mut violations = 0;
    for e in runs {
        let b = constants::per_step_bound(e.trace.delay_bound, e.problem.condition());
        let d0 = e.trace.rows[0].dist;
        let half_l = 0.5 * e.problem.lipschitz();
        for r in &e.trace.rows {
            if r.cost_gap > half_l * b.powi(2 * r.k as i32) * d0 * d0 * slack {
                violations += 1;
            }
        }
    }
    result(
        2,
        "cost rate at gamma*",
        violations == 0,
        format!("{} runs, {violations} violations", runs.len()),
    )
}

fn gd_contraction() -> CriterionResult {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut steps = 0;
    for q in [2.0, 10.0, 100.0] {
        let problem = two_eigenvalue_quadratic(1.0, q, 4).expect("valid input");
        let opts = RunOptions {
            method: Method::Gd,
            gamma: 2.0 / (1.0 + q),
            beta: 0.0,
            schedule: Schedule::full(1).expect("m = 1"),
            stop: StoppingRule {
                tolerance: 1e-10,
                max_iters: 100_000,
            },
        };
        let trace = run(&problem, &opts, &[1.0, -1.0, 0.5, 2.0]).expect("stable stepsize");
        let rate = (q - 1.0) / (q + 1.0);
        for w in trace.dists().windows(2) {
            steps += 1;
            worst_excess = worst_excess.max(w[1] / w[0] - rate);
        }
    }
    result(
        3,
        "gradient descent contraction",
        worst_excess <= 1e-10,
        format!("{steps} steps over Q in {{2, 10, 100}}, max ratio − (Q−1)/(Q+1) = {worst_excess:.2e}"),
    )
}

fn iag_error_bounds(sets: &[&[Experiment]]) -> CriterionResult {
    let mut runs = 0;
    let mut failures = 0;
    for e in sets.iter().flat_map(|s| s.iter()) {
        let (l, k) = (e.problem.lipschitz(), e.trace.delay_bound);
        let tight = bounds::error_bound_check(&e.trace, |d, j| bounds::iag_error_bound_rhs(d, j, e.trace.gamma, l, k));
        let simple = bounds::error_bound_check(&e.trace, |d, j| bounds::simple_error_bound_rhs(d, j, l, k));
        runs += 1;
        if !(tight.is_ok_and(|v| v.ok()) && simple.is_ok_and(|v| v.ok())) {
            failures += 1;
        }
    }
    result(
        4,
        "IAG gradient-error bound",
        failures == 0 && runs > 0,
        format!("{runs} IAG runs (cyclic and adversarial), {failures} with violations"),
    )
}

fn momentum_bounds(runs: &[Experiment]) -> CriterionResult {
    let mut failures = 0;
    let mut worst_dist = 0.0f64;
    for e in runs {
        let (l, k) = (e.problem.lipschitz(), e.trace.delay_bound);
        let v = bounds::error_bound_check(&e.trace, |d, j| {
            bounds::iagm_error_bound_rhs(d, j, e.trace.gamma, e.trace.beta, l, k)
        });
        let dist = e.trace.final_row().dist;
        worst_dist = worst_dist.max(dist);
        if !v.is_ok_and(|v| v.ok()) || !(dist <= 1e-8) {
            failures += 1;
        }
    }
    let max_k = runs.iter().map(|e| e.trace.final_k()).max().unwrap_or(0);
    result(
        5,
        "IAG-M error bound and limit",
        failures == 0,
        format!(
            "{} runs, {failures} failing, worst final dist {worst_dist:.2e}, up to {max_k} iterations",
            runs.len()
        ),
    )
}

/// 100 random `(p, q, d_max)` with tight sequences of length 501.
///
/// `p + q` is drawn from `[0.3, 0.999)`: for smaller sums the sequences
/// underflow to subnormals within 500 terms and the relative slack no
/// longer models rounding.
pub fn lemma1_trials(seed: u64, trials: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut holds = 0;
    for _ in 0..trials {
        let s: f64 = rng.gen_range(0.3..0.999);
        let p = s * rng.gen_range(0.0..1.0);
        let q = s - p;
        let d_max = rng.gen_range(0..=10usize);
        let delays: Vec<usize> = (0..500).map(|_| rng.gen_range(0..=d_max)).collect();
        let mut v = vec![1.0f64];
        for k in 0..500usize {
            let lo = k.saturating_sub(delays[k]);
            let window = v[lo..=k].iter().cloned().fold(0.0, f64::max);
            v.push(p * v[k] + q * window);
        }
        if lemma1_check(&v, p, q, |k| delays[k], d_max) == Ok(Lemma1Verdict::Holds) {
            holds += 1;
        }
    }
    (holds, trials)
}

fn lemma1() -> CriterionResult {
    let (holds, trials) = lemma1_trials(6, 100);
    result(
        6,
        "delayed-recursion lemma",
        holds == trials,
        format!("{holds}/{trials} tight random sequences satisfy the rate"),
    )
}

fn rel_gap(a: &[f64], b: &[f64], scale: f64) -> f64 {
    linalg::dist(a, b) / linalg::norm(b).max(scale)
}

/// Largest per-step relative gap over `steps` steps, for the three
/// reduction identities on one seed.
pub fn reduction_gaps(seed: u64, steps: usize) -> [f64; 3] {
    let m = 4;
    let problem: Problem = make_quadratic_sum(400 + seed, m, 6, 1.0, 20.0).expect("valid generator input");
    let scale = linalg::norm(problem.x_star()).max(1e-12);
    let gamma = 1.0 / problem.lipschitz();
    let x0 = x0_for(&problem, seed);

    let gd = |p: &Problem, x0: &[f64]| {
        let mut x = x0.to_vec();
        let mut path = vec![x.clone()];
        for _ in 0..steps {
            let g = p.full_gradient(&x).expect("dimension matches");
            linalg::axpy(-gamma, &g, &mut x);
            path.push(x.clone());
        }
        path
    };
    let iag = |p: &Problem, x0: &[f64], sched: &Schedule, beta: Option<f64>| {
        let mut state = init_state(p, x0).expect("dimension matches");
        let mut path = vec![state.x.clone()];
        for _ in 0..steps {
            match beta {
                Some(b) => iagm_step(&mut state, p, gamma, b, sched),
                None => iag_step(&mut state, p, gamma, sched),
            }
            .expect("valid step");
            path.push(state.x.clone());
        }
        path
    };
    let worst = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter().zip(b).map(|(x, y)| rel_gap(x, y, scale)).fold(0.0, f64::max)
    };

    let full = Schedule::full(m).expect("m ≥ 1");
    let cyclic = Schedule::cyclic(m).expect("m ≥ 1");
    let full_vs_gd = worst(&iag(&problem, &x0, &full, None), &gd(&problem, &x0));
    let momentum_vs_iag = worst(&iag(&problem, &x0, &cyclic, Some(0.0)), &iag(&problem, &x0, &cyclic, None));

    let single: Problem = make_quadratic_sum(500 + seed, 1, 6, 1.0, 20.0).expect("valid generator input");
    let x1 = x0_for(&single, seed);
    let one = Schedule::cyclic(1).expect("m = 1");
    let single_vs_gd = worst(&iag(&single, &x1, &one, None), &gd(&single, &x1));
    [full_vs_gd, momentum_vs_iag, single_vs_gd]
}

fn reductions() -> CriterionResult {
    let gaps: Vec<[f64; 3]> = (0..5u64).into_par_iter().map(|s| reduction_gaps(s, 1_000)).collect();
    let worst = gaps.iter().fold([0.0f64; 3], |acc, g| [acc[0].max(g[0]), acc[1].max(g[1]), acc[2].max(g[2])]);
    result(
        7,
        "reduction identities",
        worst.iter().all(|&g| g <= 1e-12),
        format!(
            "max relative gap: full-refresh IAG vs GD {:.1e}, IAG-M(0) vs IAG {:.1e}, single-component IAG vs GD {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn iag_vs_ig(pairs: &[(Experiment, Experiment)]) -> CriterionResult {
    let mut ok = true;
    let mut min_ratio = f64::INFINITY;
    let mut floors = Vec::new();
    for (iag, ig) in pairs {
        let (d_iag, d_ig) = (iag.trace.final_row().dist, ig.trace.final_row().dist);
        ok &= d_iag <= 1e-8 && d_ig >= 10.0 * d_iag;
        min_ratio = min_ratio.min(d_ig / d_iag);
        floors.push(format!("{d_ig:.2e}"));
    }
    result(
        8,
        "IAG vs IG at equal stepsize",
        ok,
        format!("min IG/IAG final dist ratio {min_ratio:.2e}; IG floors [{}]", floors.join(", ")),
    )
}

/// Exact-arithmetic checks of the certificate constants, with the
/// perturbation term supplied by `q_fn`. Returns `(passed, detail)`.
pub fn certificate_arithmetic_with(
    q_fn: impl Fn(BigRational, BigRational, usize) -> BigRational + Copy,
) -> (bool, String) {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let exact_ok = constants::c_k::<BigRational>(1) == r(2, 75)
        && constants::c_k::<BigRational>(2) == r(1, 125)
        && constants::gamma_bar(r(1, 1), r(1, 1), 1) == r(4, 25);
    let mut evaluated = 0;
    let mut gated_evaluated = 0;
    let mut failed = Vec::new();
    for k in 1..=8 {
        for mu in [r(1, 1), r(1, 3), r(7, 2)] {
            for q in [1, 2, 5, 10, 50, 100, 1000] {
                let l = mu.clone() * r(q, 1);
                let bar = constants::gamma_bar(mu.clone(), l.clone(), k);
                for t in [r(1, 1000), r(1, 10), r(1, 2), r(9, 10), r(999, 1000)] {
                    for c in certificate_arithmetic(mu.clone(), l.clone(), k, bar.clone() * t, q_fn) {
                        match c.holds {
                            Some(true) => evaluated += 1,
                            Some(false) => {
                                evaluated += 1;
                                if !failed.contains(&c.name) {
                                    failed.push(c.name);
                                }
                            }
                            None => {}
                        }
                        if matches!(c.name, "delay_product_bound" | "q_at_most_25_4_d") && c.holds.is_some() {
                            gated_evaluated += 1;
                        }
                    }
                }
            }
        }
    }
    let passed = exact_ok && failed.is_empty() && gated_evaluated > 0;
    let detail = if failed.is_empty() {
        format!("exact constants {}, {evaluated} grid inequalities hold", if exact_ok { "match" } else { "DIFFER" })
    } else {
        format!("failing: {}", failed.join(", "))
    };
    (passed, detail)
}

fn certificate_arithmetic_criterion() -> CriterionResult {
    let (passed, detail) = certificate_arithmetic_with(constants::perturbation_q);
    result(9, "certificate arithmetic", passed, detail)
}

fn gradient_oracles() -> CriterionResult {
    let mut problems = vec![
        ("quadratic", make_quadratic_sum(600, 5, 8, 1.0, 50.0).expect("valid input")),
        ("quadratic", make_quadratic_sum(601, 3, 3, 0.1, 1.0).expect("valid input")),
        ("quadratic", two_eigenvalue_quadratic(1.0, 100.0, 3).expect("valid input")),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(602);
    let data = Dataset::random(&mut rng, 120, 6);
    problems.push(("logistic", make_logistic_l2(&data, 0.05, 6).expect("valid input")));
    let reports: Vec<_> = problems
        .iter()
        .enumerate()
        .map(|(i, (_, p))| gradcheck(p, 700 + i as u64, GRADCHECK_POINTS))
        .collect();
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    result(
        10,
        "gradient oracles",
        reports.iter().all(|r| r.passed),
        format!("{} problems (quadratic, logistic), max relative error {worst:.2e}", problems.len()),
    )
}

fn timed(f: impl FnOnce() -> CriterionResult) -> CriterionResult {
    let start = Instant::now();
    let mut r = f();
    r.seconds += start.elapsed().as_secs_f64();
    r
}

/// Runs every acceptance criterion.
pub fn run_suite() -> SuiteReport {
    let start = Instant::now();
    let mut criteria = Vec::new();

    let t = Instant::now();
    let rate = rate_runs();
    let rate_secs = t.elapsed().as_secs_f64();
    criteria.push(timed(|| distance_rate(&rate, rate_secs)));
    criteria.last_mut().expect("just pushed").seconds += rate_secs;
    criteria.push(timed(|| cost_rate(&rate)));
    criteria.push(timed(gd_contraction));

    let t = Instant::now();
    let adversarial = adversarial_runs();
    let pairs = iag_ig_runs();
    let run_secs = t.elapsed().as_secs_f64();
    let (iag_of_pairs, ig_of_pairs): (Vec<Experiment>, Vec<Experiment>) = pairs.into_iter().unzip();
    let mut c4 = timed(|| iag_error_bounds(&[&rate, &adversarial, &iag_of_pairs]));
    c4.seconds += run_secs;
    criteria.push(c4);

    let t = Instant::now();
    let momentum = momentum_runs();
    let momentum_secs = t.elapsed().as_secs_f64();
    let mut c5 = timed(|| momentum_bounds(&momentum));
    c5.seconds += momentum_secs;
    criteria.push(c5);

    criteria.push(timed(lemma1));
    criteria.push(timed(reductions));
    let pairs: Vec<_> = iag_of_pairs.into_iter().zip(ig_of_pairs).collect();
    criteria.push(timed(|| iag_vs_ig(&pairs)));
    criteria.push(timed(certificate_arithmetic_criterion));
    criteria.push(timed(gradient_oracles));

    let wall = start.elapsed().as_secs_f64();
    let within = wall <= SUITE_TIME_BUDGET;
    SuiteReport {
        passed: within && criteria.iter().all(|c| c.passed),
        criteria,
        wall_time_seconds: wall,
        within_time_budget: within,
    }
}
