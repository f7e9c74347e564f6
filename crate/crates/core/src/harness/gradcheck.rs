//! Finite-difference audit of every component gradient of a problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::problems::finite_difference_gradient;
use crate::Problem;

/// Relative error allowed between analytic and central-difference gradients.
pub const GRADCHECK_TOLERANCE: f64 = 1e-6;
/// Finite-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Random points per component.
pub const GRADCHECK_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentGradcheck {
    pub index: usize,
    pub max_rel_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub points: usize,
    pub step: f64,
    pub tolerance: f64,
    pub components: Vec<ComponentGradcheck>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Checks the problem's own gradients at `points` seeded random points
/// per component.
pub fn gradcheck(problem: &Problem, seed: u64, points: usize) -> GradcheckReport {
    gradcheck_with(problem, seed, points, |i, x| problem.component(i).gradient(x))
}

/// As [`gradcheck`] with the analytic gradient supplied by `grad(i, x)`.
///
/// Points are `x* + u` with `u` uniform in `[-3, 3]^n`. The error is
/// `‖g − fd‖ / max(‖fd‖, 1)`.
pub fn gradcheck_with(
    problem: &Problem,
    seed: u64,
    points: usize,
    grad: impl Fn(usize, &[f64]) -> Vec<f64>,
) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components: Vec<ComponentGradcheck> = (0..problem.len())
        .map(|i| {
            let c = problem.component(i);
            let max_rel_error = (0..points)
                .map(|_| {
                    let x: Vec<f64> = problem
                        .x_star()
                        .iter()
                        .map(|&s| s + rng.gen_range(-3.0..3.0))
                        .collect();
                    let fd = finite_difference_gradient(c, &x, GRADCHECK_STEP);
                    linalg::dist(&grad(i, &x), &fd) / linalg::norm(&fd).max(1.0)
                })
                .fold(0.0, f64::max);
            ComponentGradcheck {
                index: i,
                max_rel_error,
                ok: max_rel_error <= GRADCHECK_TOLERANCE,
            }
        })
        .collect();
    let max_rel_error = components.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    GradcheckReport {
        points,
        step: GRADCHECK_STEP,
        tolerance: GRADCHECK_TOLERANCE,
        passed: components.iter().all(|c| c.ok),
        components,
        max_rel_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_logistic_l2, make_quadratic_sum, Dataset};

    #[test]
    fn generated_problems_pass() {
        let q = make_quadratic_sum(4, 5, 6, 1.0, 30.0).unwrap();
        assert!(gradcheck(&q, 1, GRADCHECK_POINTS).passed);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = Dataset::random(&mut rng, 60, 4);
        let lg = make_logistic_l2(&data, 0.1, 4).unwrap();
        let rep = gradcheck(&lg, 1, GRADCHECK_POINTS);
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.components.len(), 4);
    }

    #[test]
    fn doubled_gradient_fails_with_unit_error() {
        let q = make_quadratic_sum(4, 3, 5, 1.0, 10.0).unwrap();
        let rep = gradcheck_with(&q, 1, GRADCHECK_POINTS, |i, x| {
            q.component(i).gradient(x).iter().map(|g| 2.0 * g).collect()
        });
        assert!(!rep.passed);
        for c in &rep.components {
            assert!((c.max_rel_error - 1.0).abs() < 1e-6, "{c:?}");
        }
    }
}
