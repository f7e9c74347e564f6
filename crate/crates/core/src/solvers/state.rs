use super::{Schedule, SolverError};
use crate::linalg;
use crate::problems::Problem;
use crate::scalar::Scalar;

/// Incremental updates between full re-summations of the aggregate.
const RESYNC_PERIOD: usize = 1024;

/// Most recent component gradients `∇f_i(x^{τ_i})`, their sample times and
/// the maintained aggregate `g = Σ_i ∇f_i(x^{τ_i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTable<T: Scalar> {
    stored: Vec<Vec<T>>,
    sample_times: Vec<usize>,
    aggregate: Vec<T>,
    since_resync: usize,
}

impl<T: Scalar> GradientTable<T> {
    fn fresh(problem: &Problem<T>, x: &[T]) -> Self {
        let stored: Vec<Vec<T>> = problem.components().iter().map(|c| c.gradient(x)).collect();
        let mut table = Self {
            sample_times: vec![0; stored.len()],
            aggregate: vec![T::zero(); x.len()],
            stored,
            since_resync: 0,
        };
        table.resum();
        table
    }

    fn resum(&mut self) {
        self.aggregate.iter_mut().for_each(|v| *v = T::zero());
        for g in &self.stored {
            for (a, &v) in self.aggregate.iter_mut().zip(g) {
                *a = *a + v;
            }
        }
        self.since_resync = 0;
    }

    /// Re-evaluates the components in `refresh` at `x`, stamping them with
    /// sample time `k`.
    fn refresh(&mut self, problem: &Problem<T>, refresh: &[usize], x: &[T], k: usize) {
        let mut fresh = vec![T::zero(); x.len()];
        for &i in refresh {
            problem.component(i).gradient_into(x, &mut fresh);
            for ((a, old), &new) in self.aggregate.iter_mut().zip(&self.stored[i]).zip(&fresh) {
                *a = *a - *old + new;
            }
            self.stored[i].copy_from_slice(&fresh);
            self.sample_times[i] = k;
        }
        self.since_resync += 1;
        let covers_all = refresh.len() >= self.stored.len() && {
            let mut seen = vec![false; self.stored.len()];
            refresh.iter().for_each(|&i| seen[i] = true);
            seen.into_iter().all(|s| s)
        };
        if covers_all || self.since_resync >= RESYNC_PERIOD {
            self.resum();
        }
    }

    pub fn stored(&self) -> &[Vec<T>] {
        &self.stored
    }

    /// Sample times `τ_i`.
    pub fn sample_times(&self) -> &[usize] {
        &self.sample_times
    }

    /// Aggregate `g^k`.
    pub fn aggregate(&self) -> &[T] {
        &self.aggregate
    }

    /// Largest `|g − Σ stored|` over coordinates, recomputed from scratch.
    pub fn drift(&self) -> T {
        let mut sum = vec![T::zero(); self.aggregate.len()];
        for g in &self.stored {
            for (s, &v) in sum.iter_mut().zip(g) {
                *s = *s + v;
            }
        }
        linalg::dist(&sum, &self.aggregate)
    }
}

/// Iterate, previous iterate and gradient table at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T: Scalar> {
    pub x: Vec<T>,
    pub x_prev: Vec<T>,
    pub table: GradientTable<T>,
    pub k: usize,
}

/// State at `k = 0` under `x^0 = x^{-1} = … = x^{-K}`: every stored gradient
/// is sampled at `x0`, all `τ_i = 0` and hence `e^0 = 0`.
pub fn init_state<T: Scalar>(problem: &Problem<T>, x0: &[T]) -> Result<SolverState<T>, SolverError> {
    problem.check_dim(x0)?;
    Ok(SolverState {
        x: x0.to_vec(),
        x_prev: x0.to_vec(),
        table: GradientTable::fresh(problem, x0),
        k: 0,
    })
}

fn check_step<T: Scalar>(
    state: &SolverState<T>,
    problem: &Problem<T>,
    gamma: T,
    schedule: &Schedule,
) -> Result<(), SolverError> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(SolverError::InvalidParameter(format!(
            "stepsize must be positive, got {gamma}"
        )));
    }
    if schedule.components() != problem.len() {
        return Err(SolverError::InvalidSchedule(format!(
            "schedule covers {} components, problem has {}",
            schedule.components(),
            problem.len()
        )));
    }
    if schedule.refresh(state.k + 1).is_empty() {
        return Err(SolverError::EmptyRefresh(state.k + 1));
    }
    Ok(())
}

/// One IAG iteration: `x^{k+1} = x^k − γ g^k`, then the components in
/// `refresh(k + 1)` are re-evaluated at `x^{k+1}`.
pub fn iag_step<T: Scalar>(
    state: &mut SolverState<T>,
    problem: &Problem<T>,
    gamma: T,
    schedule: &Schedule,
) -> Result<(), SolverError> {
    iagm_step(state, problem, gamma, T::zero(), schedule)
}

/// One IAG-M iteration: `x^{k+1} = x^k − γ g^k + β (x^k − x^{k−1})`, with the
/// same table refresh as [`iag_step`].
pub fn iagm_step<T: Scalar>(
    state: &mut SolverState<T>,
    problem: &Problem<T>,
    gamma: T,
    beta: T,
    schedule: &Schedule,
) -> Result<(), SolverError> {
    check_step(state, problem, gamma, schedule)?;
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(SolverError::InvalidParameter(format!(
            "momentum must be nonnegative, got {beta}"
        )));
    }
    let mut next = state.x.clone();
    linalg::axpy(-gamma, state.table.aggregate(), &mut next);
    if beta != T::zero() {
        for ((n, &x), &xp) in next.iter_mut().zip(&state.x).zip(&state.x_prev) {
            *n = *n + beta * (x - xp);
        }
    }
    state.x_prev = std::mem::replace(&mut state.x, next);
    state.k += 1;
    state
        .table
        .refresh(problem, schedule.refresh(state.k), &state.x, state.k);
    Ok(())
}

/// `e^k = g^k − ∇f(x^k)`.
pub fn gradient_error<T: Scalar>(state: &SolverState<T>, problem: &Problem<T>) -> Vec<T> {
    let full = problem.full_gradient_unchecked(&state.x);
    linalg::sub(state.table.aggregate(), &full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic_sum, QuadraticComponent};

    /// f_1 = ½ a_1 x², f_2 = ½ a_2 (x − 2)² on the real line.
    fn scalar_pair(a1: f64, a2: f64) -> Problem<f64> {
        let c1 = QuadraticComponent::new(vec![a1], vec![0.0], 0.0).unwrap();
        let c2 = QuadraticComponent::new(vec![a2], vec![-2.0 * a2], 2.0 * a2).unwrap();
        Problem::new(vec![Box::new(c1), Box::new(c2)], a1 + a2, vec![2.0 * a2 / (a1 + a2)]).unwrap()
    }

    /// Brute-force table replay for the cyclic order on `scalar_pair`.
    /// Returns iterates and gradient errors.
    fn replay(a: [f64; 2], gamma: f64, beta: f64, steps: usize, x0: f64) -> (Vec<f64>, Vec<f64>) {
        let grad = |i: usize, x: f64| if i == 0 { a[0] * x } else { a[1] * (x - 2.0) };
        let mut samples = [x0, x0];
        let mut xs = vec![x0];
        let mut errs = vec![0.0];
        let mut prev = x0;
        for k in 0..steps {
            let x = xs[k];
            let g = grad(0, samples[0]) + grad(1, samples[1]);
            let next = x - gamma * g + beta * (x - prev);
            prev = x;
            samples[k % 2] = next;
            xs.push(next);
            let g_next = grad(0, samples[0]) + grad(1, samples[1]);
            errs.push(g_next - (grad(0, next) + grad(1, next)));
        }
        (xs, errs)
    }

    #[test]
    fn init_has_zero_error_and_full_aggregate() {
        let p = make_quadratic_sum::<f64>(5, 4, 3, 1.0, 6.0).unwrap();
        let x0 = [1.0, -2.0, 0.5];
        let s = init_state(&p, &x0).unwrap();
        assert!(gradient_error(&s, &p).iter().all(|&e| e == 0.0));
        assert_eq!(s.table.aggregate(), p.full_gradient(&x0).unwrap().as_slice());
        assert_eq!(s.x_prev, s.x);
        assert!(s.table.sample_times().iter().all(|&t| t == 0));
        assert!(init_state(&p, &[1.0]).is_err());
    }

    #[test]
    fn first_step_is_a_gradient_step() {
        let p = make_quadratic_sum::<f64>(6, 3, 4, 1.0, 8.0).unwrap();
        let x0 = [0.3, 0.1, -1.0, 2.0];
        let g = p.full_gradient(&x0).unwrap();
        for schedule in [Schedule::cyclic(3).unwrap(), Schedule::adversarial(3, 5, 1).unwrap()] {
            let mut s = init_state(&p, &x0).unwrap();
            iagm_step(&mut s, &p, 0.01, 0.3, &schedule).unwrap();
            for j in 0..4 {
                assert!((s.x[j] - (x0[j] - 0.01 * g[j])).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn iag_matches_brute_force_replay() {
        let p = scalar_pair(1.0, 3.0);
        let sched = Schedule::cyclic(2).unwrap();
        let (xs, errs) = replay([1.0, 3.0], 0.1, 0.0, 10, 5.0);
        let mut s = init_state(&p, &[5.0]).unwrap();
        for k in 1..=10 {
            iag_step(&mut s, &p, 0.1, &sched).unwrap();
            assert!((s.x[0] - xs[k]).abs() <= 1e-14 * xs[k].abs().max(1.0));
            let e = gradient_error(&s, &p)[0];
            assert!((e - errs[k]).abs() <= 1e-13, "k={k}: {e} vs {}", errs[k]);
        }
    }

    #[test]
    fn gradient_error_after_three_cyclic_steps() {
        // x0 = 0, γ = 0.1, a = (1, 1): by hand
        // g0 = 0 + (0 − 2) = −2      → x1 = 0.2, refresh 1: samples (0.2, 0)
        // g1 = 0.2 − 2 = −1.8        → x2 = 0.38, refresh 2: samples (0.2, 0.38)
        // g2 = 0.2 + 0.38 − 2 = −1.42 → x3 = 0.522, refresh 1: samples (0.522, 0.38)
        // e3 = (0.522 + 0.38 − 2) − (2·0.522 − 2) = 0.38 − 0.522 = −0.142
        let p = scalar_pair(1.0, 1.0);
        let sched = Schedule::cyclic(2).unwrap();
        let mut s = init_state(&p, &[0.0]).unwrap();
        for _ in 0..3 {
            iag_step(&mut s, &p, 0.1, &sched).unwrap();
        }
        assert!((s.x[0] - 0.522).abs() < 1e-15);
        assert!((gradient_error(&s, &p)[0] + 0.142).abs() < 1e-15);
        assert_eq!(s.table.sample_times(), &[3, 2]);
    }

    #[test]
    fn iagm_matches_hand_recursion() {
        let p = scalar_pair(2.0, 1.0);
        let sched = Schedule::cyclic(2).unwrap();
        let (xs, _) = replay([2.0, 1.0], 0.2, 0.1, 5, 1.0);
        let mut s = init_state(&p, &[1.0]).unwrap();
        for k in 1..=5 {
            iagm_step(&mut s, &p, 0.2, 0.1, &sched).unwrap();
            assert!((s.x[0] - xs[k]).abs() <= 1e-14, "k={k}");
        }
    }

    #[test]
    fn zero_momentum_is_bitwise_iag() {
        let p = make_quadratic_sum::<f64>(12, 5, 6, 1.0, 20.0).unwrap();
        let sched = Schedule::cyclic(5).unwrap();
        let x0 = vec![1.0; 6];
        let mut a = init_state(&p, &x0).unwrap();
        let mut b = a.clone();
        for _ in 0..1000 {
            iag_step(&mut a, &p, 0.002, &sched).unwrap();
            iagm_step(&mut b, &p, 0.002, 0.0, &sched).unwrap();
            assert_eq!(a.x, b.x);
        }
    }

    #[test]
    fn full_refresh_is_gradient_descent() {
        let p = make_quadratic_sum::<f64>(13, 4, 5, 1.0, 10.0).unwrap();
        let sched = Schedule::full(4).unwrap();
        let mut s = init_state(&p, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let mut x = s.x.clone();
        let gamma = 2.0 / (p.mu() + p.lipschitz());
        for _ in 0..1000 {
            iag_step(&mut s, &p, gamma, &sched).unwrap();
            let g = p.full_gradient(&x).unwrap();
            linalg::axpy(-gamma, &g, &mut x);
            assert!(linalg::dist(&s.x, &x) <= 1e-12 * linalg::norm(&x).max(f64::MIN_POSITIVE));
            assert!(gradient_error(&s, &p).iter().all(|&e| e == 0.0));
        }
    }

    #[test]
    fn rejects_bad_step_parameters() {
        let p = scalar_pair(1.0, 1.0);
        let sched = Schedule::cyclic(2).unwrap();
        let mut s = init_state(&p, &[0.0]).unwrap();
        assert!(iag_step(&mut s, &p, 0.0, &sched).is_err());
        assert!(iagm_step(&mut s, &p, 0.1, -1.0, &sched).is_err());
        assert!(iag_step(&mut s, &p, 0.1, &Schedule::cyclic(3).unwrap()).is_err());
        assert_eq!(s.k, 0);
    }

    #[test]
    fn table_never_drifts() {
        let p = make_quadratic_sum::<f64>(14, 7, 4, 1.0, 30.0).unwrap();
        let sched = Schedule::adversarial(7, 10, 3).unwrap();
        let mut s = init_state(&p, &[10.0, -10.0, 5.0, 0.0]).unwrap();
        for _ in 0..3000 {
            iag_step(&mut s, &p, 1e-3, &sched).unwrap();
            let agg = s.table.aggregate();
            assert!(s.table.drift() <= 1e-12 * (1.0 + linalg::norm(agg)));
            let k = s.k;
            assert!(s.table.sample_times().iter().all(|&t| t + 10 >= k && t <= k));
        }
    }
}
