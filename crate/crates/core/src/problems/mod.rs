//! Finite-sum objectives `f(x) = Σ f_i(x)` with exact component oracles.
//!
//! Every [`Problem`] carries the constants the rate certificates need:
//! the per-component gradient Lipschitz constants `L_i`, their sum `L`,
//! the strong convexity parameter `mu` of the sum, `Q = L / mu` and a
//! reference optimum.

mod data;
mod logistic;
mod quadratic;

use std::fmt::Debug;

use thiserror::Error;

use crate::linalg;
use crate::scalar::Scalar;

pub use data::{load_labeled_csv, Dataset};
pub use logistic::{make_logistic_l2, LogisticBlock};
pub use quadratic::{make_quadratic_sum, two_eigenvalue_quadratic, QuadraticComponent};

/// Absolute tolerance on `‖∇f(x_star)‖` accepted for a stored optimum.
pub const OPTIMUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row}: label {value} is not -1 or +1")]
    InvalidLabel { row: usize, value: f64 },
    #[error("block {0} of the sample partition is empty")]
    EmptyBlock(usize),
    #[error("reference optimum solve did not converge after {0} iterations")]
    ReferenceSolveFailed(usize),
    #[error("stored optimum has gradient norm {0:e}, above tolerance")]
    OptimumNotStationary(f64),
    #[error("data file: {0}")]
    Data(String),
}

/// One summand `f_i` of the objective.
///
/// Implementations are immutable and evaluation is pure.
pub trait Component<T: Scalar>: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    /// Writes `∇f_i(x)` into `out` (overwriting it).
    fn gradient_into(&self, x: &[T], out: &mut [T]);

    /// Gradient Lipschitz constant `L_i`.
    fn lipschitz(&self) -> T;

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.gradient_into(x, &mut out);
        out
    }
}

/// A strongly convex finite sum with known constants and reference optimum.
#[derive(Debug)]
pub struct Problem<T: Scalar> {
    components: Vec<Box<dyn Component<T>>>,
    dim: usize,
    lipschitz: T,
    mu: T,
    condition: T,
    x_star: Vec<T>,
    f_star: T,
}

impl<T: Scalar> Problem<T> {
    /// Assembles a problem from components, the strong convexity parameter
    /// of the sum and a known optimum. `L` is always `Σ L_i`.
    pub fn new(
        components: Vec<Box<dyn Component<T>>>,
        mu: T,
        x_star: Vec<T>,
    ) -> Result<Self, ProblemError> {
        let dim = Self::check_components(&components)?;
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(ProblemError::InvalidParameter(format!(
                "strong convexity parameter must be positive, got {mu}"
            )));
        }
        if x_star.len() != dim {
            return Err(ProblemError::DimensionMismatch {
                expected: dim,
                got: x_star.len(),
            });
        }
        let lipschitz = components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.lipschitz());
        if lipschitz < mu {
            return Err(ProblemError::InvalidParameter(format!(
                "sum of component Lipschitz constants {lipschitz} is below mu {mu}"
            )));
        }
        let f_star = components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.value(&x_star));
        Ok(Self {
            components,
            dim,
            lipschitz,
            mu,
            condition: lipschitz / mu,
            x_star,
            f_star,
        })
    }

    /// Like [`Problem::new`] but computes the optimum by full gradient
    /// descent with stepsize `2 / (mu + L)`, iterating until
    /// `‖∇f(x)‖ ≤ 1e-12 · max(1, ‖x‖)` (floored at the scalar's precision).
    pub fn with_reference_optimum(
        components: Vec<Box<dyn Component<T>>>,
        mu: T,
    ) -> Result<Self, ProblemError> {
        let dim = Self::check_components(&components)?;
        let mut problem = Self::new(components, mu, vec![T::zero(); dim])?;
        let x_star = problem.solve_reference(10_000_000)?;
        problem.f_star = problem.value(&x_star);
        problem.x_star = x_star;
        let residual = linalg::norm(&problem.full_gradient_unchecked(&problem.x_star));
        let tol = T::lit(OPTIMUM_TOLERANCE).max(T::epsilon() * T::lit(1e4));
        if residual > tol * T::one().max(linalg::norm(&problem.x_star)) {
            return Err(ProblemError::OptimumNotStationary(residual.as_f64()));
        }
        Ok(problem)
    }

    fn check_components(components: &[Box<dyn Component<T>>]) -> Result<usize, ProblemError> {
        let first = components.first().ok_or_else(|| {
            ProblemError::InvalidParameter("a problem needs at least one component".into())
        })?;
        let dim = first.dim();
        if dim == 0 {
            return Err(ProblemError::InvalidParameter("dimension must be positive".into()));
        }
        for c in components {
            if c.dim() != dim {
                return Err(ProblemError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            if !(c.lipschitz() >= T::zero()) {
                return Err(ProblemError::InvalidParameter(
                    "component Lipschitz constants must be nonnegative".into(),
                ));
            }
        }
        Ok(dim)
    }

    fn solve_reference(&self, max_iters: usize) -> Result<Vec<T>, ProblemError> {
        let step = T::lit(2.0) / (self.mu + self.lipschitz);
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let mut x = vec![T::zero(); self.dim];
        let mut grad = vec![T::zero(); self.dim];
        for _ in 0..max_iters {
            self.full_gradient_into(&x, &mut grad);
            if linalg::norm(&grad) <= tol * T::one().max(linalg::norm(&x)) {
                return Ok(x);
            }
            linalg::axpy(-step, &grad, &mut x);
        }
        Err(ProblemError::ReferenceSolveFailed(max_iters))
    }

    pub fn components(&self) -> &[Box<dyn Component<T>>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &dyn Component<T> {
        self.components[i].as_ref()
    }

    /// Number of components `m`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L = Σ L_i`.
    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    /// Condition number `Q = L / mu`.
    pub fn condition(&self) -> T {
        self.condition
    }

    pub fn x_star(&self) -> &[T] {
        &self.x_star
    }

    pub fn f_star(&self) -> T {
        self.f_star
    }

    pub fn value(&self, x: &[T]) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.value(x))
    }

    /// `f(x) − f*`.
    pub fn cost_gap(&self, x: &[T]) -> T {
        self.value(x) - self.f_star
    }

    /// Exact `∇f(x) = Σ ∇f_i(x)`, summed in index order.
    pub fn full_gradient(&self, x: &[T]) -> Result<Vec<T>, ProblemError> {
        self.check_dim(x)?;
        Ok(self.full_gradient_unchecked(x))
    }

    pub(crate) fn full_gradient_unchecked(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.full_gradient_into(x, &mut out);
        out
    }

    pub(crate) fn full_gradient_into(&self, x: &[T], out: &mut [T]) {
        let mut scratch = vec![T::zero(); self.dim];
        out.iter_mut().for_each(|v| *v = T::zero());
        for c in &self.components {
            c.gradient_into(x, &mut scratch);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o = *o + *s;
            }
        }
    }

    pub fn check_dim(&self, x: &[T]) -> Result<(), ProblemError> {
        if x.len() != self.dim {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Central-difference gradient of one component with step `h`.
pub fn finite_difference_gradient<T: Scalar>(c: &dyn Component<T>, x: &[T], h: T) -> Vec<T> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            let orig = probe[j];
            probe[j] = orig + h;
            let up = c.value(&probe);
            probe[j] = orig - h;
            let down = c.value(&probe);
            probe[j] = orig;
            (up - down) / (h + h)
        })
        .collect()
}

/// Relative gradient error `‖∇f_i(x) − fd‖ / max(‖fd‖, 1)` against central
/// differences with step `1e-5`.
pub fn gradient_check_error<T: Scalar>(c: &dyn Component<T>, x: &[T]) -> T {
    let fd = finite_difference_gradient(c, x, T::lit(1e-5));
    let g = c.gradient(x);
    linalg::dist(&g, &fd) / linalg::norm(&fd).max(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    #[test]
    fn rejects_empty_and_mismatched_components() {
        let err = Problem::<f64>::new(Vec::new(), 1.0, vec![]).unwrap_err();
        assert!(matches!(err, ProblemError::InvalidParameter(_)));

        let a = QuadraticComponent::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let b = QuadraticComponent::new(vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap();
        let err = Problem::new(vec![Box::new(a), Box::new(b)], 1.0, vec![0.0]).unwrap_err();
        assert!(matches!(err, ProblemError::DimensionMismatch { .. }));
    }

    #[test]
    fn stored_constants_are_consistent() {
        let p = make_quadratic_sum::<f64>(4, 5, 3, 1.0, 10.0).unwrap();
        let sum: f64 = p.components().iter().map(|c| c.lipschitz()).sum();
        assert_eq!(p.lipschitz(), sum);
        assert_eq!(p.condition(), p.lipschitz() / p.mu());
        assert!(p.condition() >= 1.0);
    }

    #[test]
    fn full_gradient_single_component_is_identity() {
        let p = make_quadratic_sum::<f64>(2, 1, 4, 0.5, 3.0).unwrap();
        let x = [0.3, -1.0, 2.0, 0.7];
        assert_eq!(p.full_gradient(&x).unwrap(), p.component(0).gradient(&x));
        assert!(matches!(
            p.full_gradient(&[1.0]),
            Err(ProblemError::DimensionMismatch { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn smoothness_and_strong_convexity_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = make_quadratic_sum::<f64>(9, 4, 6, 0.7, 20.0).unwrap();
        let (l, mu) = (p.lipschitz(), p.mu());
        for _ in 0..50 {
            let y = random_point(&mut rng, 6, 5.0);
            let z = random_point(&mut rng, 6, 5.0);
            let gy = p.full_gradient(&y).unwrap();
            let gz = p.full_gradient(&z).unwrap();
            let diff = linalg::sub(&gy, &gz);
            let yz = linalg::sub(&y, &z);
            assert!(linalg::dot(&diff, &yz) >= mu * linalg::dot(&yz, &yz) - 1e-9);
            for c in p.components() {
                let d = linalg::dist(&c.gradient(&y), &c.gradient(&z));
                assert!(d <= c.lipschitz() * linalg::norm(&yz) * (1.0 + 1e-9));
            }
            let dy = linalg::dist(&y, p.x_star());
            assert!(linalg::norm(&gy) <= l * dy * (1.0 + 1e-9));
            assert!(p.cost_gap(&y) <= 0.5 * l * dy * dy * (1.0 + 1e-9) + 1e-9);
        }
    }

    #[test]
    fn finite_differences_match_every_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = make_quadratic_sum::<f64>(1, 3, 4, 1.0, 5.0).unwrap();
        let data = Dataset::random(&mut rng, 30, 4);
        let lg = make_logistic_l2(&data, 0.3, 3).unwrap();
        for p in [&q, &lg] {
            for c in p.components() {
                for _ in 0..20 {
                    let x = random_point(&mut rng, 4, 2.0);
                    assert!(gradient_check_error(c.as_ref(), &x) <= 1e-6);
                }
            }
        }
    }
}
