use super::{gradient_error, iagm_step, igm_step, init_state, Method, Schedule, SolverError, Trace, TraceRow};
use crate::linalg;
use crate::problems::Problem;
use crate::scalar::Scalar;
use crate::theory::{bounds, constants};

/// Iterates with norm above this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Stop once `‖g^k‖ ≤ tolerance` or after `max_iters` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule<T: Scalar> {
    pub tolerance: T,
    pub max_iters: usize,
}

impl<T: Scalar> Default for StoppingRule<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            max_iters: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions<T: Scalar> {
    pub method: Method,
    pub gamma: T,
    /// Momentum; must be zero for IAG, IG and GD.
    pub beta: T,
    /// Refresh schedule for IAG and IAG-M. IG variants always sweep
    /// components in cyclic order; GD ignores it.
    pub schedule: Schedule,
    pub stop: StoppingRule<T>,
}

impl<T: Scalar> RunOptions<T> {
    fn validate(&self, problem: &Problem<T>) -> Result<(), SolverError> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(SolverError::InvalidParameter(format!(
                "stepsize must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(SolverError::InvalidParameter(format!(
                "momentum must be nonnegative, got {}",
                self.beta
            )));
        }
        if self.beta != T::zero() && !self.method.uses_momentum() {
            return Err(SolverError::InvalidParameter(format!(
                "{} does not take a momentum parameter",
                self.method
            )));
        }
        if self.method.is_aggregated() && self.schedule.components() != problem.len() {
            return Err(SolverError::InvalidSchedule(format!(
                "schedule covers {} components, problem has {}",
                self.schedule.components(),
                problem.len()
            )));
        }
        Ok(())
    }
}

/// Bookkeeping shared by all methods: distances, bounds and stopping.
struct Recorder<'a, T: Scalar> {
    problem: &'a Problem<T>,
    opts: &'a RunOptions<T>,
    delay_bound: usize,
    rows: Vec<TraceRow<T>>,
    dists: Vec<T>,
    per_step: Option<T>,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    fn new(problem: &'a Problem<T>, opts: &'a RunOptions<T>, delay_bound: usize) -> Self {
        let (mu, l) = (problem.mu(), problem.lipschitz());
        let per_step = match opts.method {
            Method::Iag | Method::IagMomentum if delay_bound >= 1 => {
                Some(constants::per_step_bound(delay_bound, problem.condition()))
            }
            Method::Gd if opts.gamma <= T::lit(2.0) / (mu + l) => {
                Some(constants::contraction_p(opts.gamma, mu, l).max(T::zero()).sqrt())
            }
            _ => None,
        };
        Self {
            problem,
            opts,
            delay_bound,
            rows: Vec::new(),
            dists: Vec::new(),
            per_step,
        }
    }

    /// Records iteration `k` and reports whether the run should stop.
    fn record(&mut self, k: usize, x: &[T], grad_norm: T, err: Option<&[T]>) -> bool {
        let dist = linalg::dist(x, self.problem.x_star());
        self.dists.push(dist);
        let (gamma, beta, l) = (self.opts.gamma, self.opts.beta, self.problem.lipschitz());
        let rhs = match self.opts.method {
            Method::Iag => bounds::iag_error_bound_rhs(&self.dists, k, gamma, l, self.delay_bound).ok(),
            Method::IagMomentum => {
                bounds::iagm_error_bound_rhs(&self.dists, k, gamma, beta, l, self.delay_bound).ok()
            }
            Method::Gd => Some(T::zero()),
            Method::Ig | Method::IgMomentum => None,
        };
        let thm1_bound = self
            .per_step
            .map(|r| r.powi(k.min(i32::MAX as usize) as i32) * self.dists[0]);
        self.rows.push(TraceRow {
            k,
            dist,
            cost_gap: self.problem.cost_gap(x),
            agg_grad_norm: grad_norm,
            err_norm: err.map(linalg::norm).or(match self.opts.method {
                Method::Gd => Some(T::zero()),
                _ => None,
            }),
            err_bound_rhs: rhs,
            thm1_bound,
        });
        grad_norm <= self.opts.stop.tolerance || k >= self.opts.stop.max_iters
    }

    fn finish(self, converged: bool) -> Trace<T> {
        Trace {
            method: self.opts.method,
            gamma: self.opts.gamma,
            beta: self.opts.beta,
            delay_bound: self.delay_bound,
            components: self.problem.len(),
            rows: self.rows,
            converged,
        }
    }
}

fn check_finite<T: Scalar>(x: &[T], last_finite_k: usize) -> Result<(), SolverError> {
    if !linalg::all_finite(x) || linalg::norm(x) > T::lit(DIVERGENCE_NORM) {
        return Err(SolverError::Diverged { last_finite_k });
    }
    Ok(())
}

/// Runs `opts.method` from `x0` and records every iteration.
///
/// Row `k` describes `x^k`; the run stops after recording the first row
/// whose gradient statistic is within tolerance or when `k` reaches the
/// iteration cap. For IG and IG-M one iteration is one component step.
pub fn run<T: Scalar>(problem: &Problem<T>, opts: &RunOptions<T>, x0: &[T]) -> Result<Trace<T>, SolverError> {
    problem.check_dim(x0)?;
    opts.validate(problem)?;
    check_finite(x0, 0)?;
    let m = problem.len();
    let tol = opts.stop.tolerance;

    match opts.method {
        Method::Iag | Method::IagMomentum => {
            let mut rec = Recorder::new(problem, opts, opts.schedule.delay_bound());
            let mut state = init_state(problem, x0)?;
            loop {
                let e = gradient_error(&state, problem);
                let g_norm = linalg::norm(state.table.aggregate());
                if rec.record(state.k, &state.x, g_norm, Some(&e)) {
                    return Ok(rec.finish(g_norm <= tol));
                }
                iagm_step(&mut state, problem, opts.gamma, opts.beta, &opts.schedule)?;
                check_finite(&state.x, state.k - 1)?;
            }
        }
        Method::Gd => {
            let mut rec = Recorder::new(problem, opts, 0);
            let mut x = x0.to_vec();
            for k in 0.. {
                let g = problem.full_gradient_unchecked(&x);
                let g_norm = linalg::norm(&g);
                if rec.record(k, &x, g_norm, None) {
                    return Ok(rec.finish(g_norm <= tol));
                }
                linalg::axpy(-opts.gamma, &g, &mut x);
                check_finite(&x, k)?;
            }
            unreachable!()
        }
        Method::Ig | Method::IgMomentum => {
            let mut rec = Recorder::new(problem, opts, m - 1);
            let mut x = x0.to_vec();
            let mut outer = x0.to_vec();
            let mut outer_prev = x0.to_vec();
            for k in 0.. {
                let g_norm = linalg::norm(&problem.full_gradient_unchecked(&x));
                if rec.record(k, &x, g_norm, None) {
                    return Ok(rec.finish(g_norm <= tol));
                }
                let i = k % m;
                if i == 0 && k > 0 {
                    outer_prev = std::mem::replace(&mut outer, x.clone());
                }
                x = igm_step(&x, &outer, &outer_prev, problem, opts.gamma, opts.beta, i)?;
                check_finite(&x, k)?;
            }
            unreachable!()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic_sum;

    fn opts(method: Method, gamma: f64, m: usize) -> RunOptions<f64> {
        RunOptions {
            method,
            gamma,
            beta: 0.0,
            schedule: Schedule::cyclic(m).unwrap(),
            stop: StoppingRule::default(),
        }
    }

    #[test]
    fn huge_tolerance_records_one_row() {
        let p = make_quadratic_sum::<f64>(1, 3, 3, 1.0, 4.0).unwrap();
        for method in Method::ALL {
            let mut o = opts(method, 0.01, 3);
            o.stop.tolerance = 1e300;
            let t = run(&p, &o, &[1.0, 1.0, 1.0]).unwrap();
            assert_eq!(t.rows.len(), 1);
            assert!(t.converged);
        }
    }

    #[test]
    fn gd_at_optimal_step_contracts() {
        let p = make_quadratic_sum::<f64>(2, 4, 6, 1.0, 10.0).unwrap();
        let gamma = 2.0 / (p.mu() + p.lipschitz());
        let rate = (p.condition() - 1.0) / (p.condition() + 1.0);
        let t = run(&p, &opts(Method::Gd, gamma, 4), &[3.0; 6]).unwrap();
        assert!(t.converged);
        for w in t.rows.windows(2) {
            // ‖x − x*‖ carries ~1e-16·‖x*‖ of cancellation noise
            if w[1].dist > 1e-5 {
                assert!(w[1].dist / w[0].dist <= rate + 1e-10, "{} {} {}", w[0].dist, w[1].dist, rate);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let p = make_quadratic_sum::<f64>(2, 2, 2, 1.0, 10.0).unwrap();
        let err = run(&p, &opts(Method::Gd, 10.0, 2), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, SolverError::Diverged { .. }));
        let err = run(&p, &opts(Method::Iag, 10.0, 2), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, SolverError::Diverged { .. }));
    }

    #[test]
    fn momentum_only_for_momentum_methods() {
        let p = make_quadratic_sum::<f64>(2, 2, 2, 1.0, 3.0).unwrap();
        let mut o = opts(Method::Iag, 0.01, 2);
        o.beta = 0.1;
        assert!(run(&p, &o, &[0.0, 0.0]).is_err());
        o.method = Method::IagMomentum;
        o.stop.max_iters = 5;
        assert_eq!(run(&p, &o, &[0.0, 0.0]).unwrap().rows.len(), 6);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = make_quadratic_sum::<f64>(7, 5, 4, 1.0, 6.0).unwrap();
        let mut o = opts(Method::IagMomentum, 0.01, 5);
        o.beta = 0.05;
        o.stop.max_iters = 500;
        let a = run(&p, &o, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = run(&p, &o, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a, b);
    }
}
