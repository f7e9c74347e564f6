use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Component, Problem, ProblemError};
use crate::linalg;
use crate::scalar::Scalar;

/// `f_i(x) = ½ xᵀ A x + bᵀ x + c` with symmetric positive semidefinite `A`.
///
/// `L_i` is the largest eigenvalue of `A`.
#[derive(Debug, Clone)]
pub struct QuadraticComponent<T: Scalar> {
    dim: usize,
    /// Row-major `dim × dim`.
    hessian: Vec<T>,
    linear: Vec<T>,
    constant: T,
    lipschitz: T,
}

impl<T: Scalar> QuadraticComponent<T> {
    /// Builds a component from a row-major symmetric matrix; `L_i` is taken
    /// as its largest eigenvalue.
    pub fn new(hessian: Vec<T>, linear: Vec<T>, constant: T) -> Result<Self, ProblemError> {
        let dim = linear.len();
        if dim == 0 || hessian.len() != dim * dim {
            return Err(ProblemError::DimensionMismatch {
                expected: dim * dim,
                got: hessian.len(),
            });
        }
        let mat = DMatrix::from_row_iterator(dim, dim, hessian.iter().map(|v| v.as_f64()));
        if (&mat - mat.transpose()).amax() > 1e-12 * mat.amax().max(1.0) {
            return Err(ProblemError::InvalidParameter("hessian must be symmetric".into()));
        }
        let eig = mat.symmetric_eigen();
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if lo < -1e-10 * hi.abs().max(1.0) {
            return Err(ProblemError::InvalidParameter(format!(
                "hessian must be positive semidefinite, smallest eigenvalue {lo:e}"
            )));
        }
        Ok(Self {
            dim,
            hessian,
            linear,
            constant,
            lipschitz: T::lit(hi.max(0.0)),
        })
    }

    pub fn hessian(&self) -> &[T] {
        &self.hessian
    }

    pub fn linear(&self) -> &[T] {
        &self.linear
    }
}

impl<T: Scalar> Component<T> for QuadraticComponent<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        let mut ax = vec![T::zero(); self.dim];
        linalg::matvec(&self.hessian, x, &mut ax);
        T::lit(0.5) * linalg::dot(x, &ax) + linalg::dot(&self.linear, x) + self.constant
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        linalg::matvec(&self.hessian, x, out);
        for (o, &b) in out.iter_mut().zip(&self.linear) {
            *o = *o + b;
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Symmetric matrix function `V g(Λ) Vᵀ`.
fn spectral_map(a: &DMatrix<f64>, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(g));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

/// Random sum of `m` convex quadratics on `R^n` whose Hessian sum has
/// smallest eigenvalue exactly `mu_target` and largest eigenvalue
/// `L_true ≤ l_target` (equal to it when `n ≥ 2`).
///
/// Construction: a target Hessian `S = V Λ Vᵀ` with prescribed spectrum is
/// split as `A_i = S^{1/2} P_i S^{1/2}` where `P_i = C^{-1/2} B_i C^{-1/2}`,
/// `B_i = R_i D_i R_iᵀ` are random rotated nonnegative diagonals and
/// `C = Σ B_i`, so `Σ A_i = S`. The optimum solves `(Σ A_i) x = −Σ b_i`.
pub fn make_quadratic_sum<T: Scalar>(
    seed: u64,
    m: usize,
    n: usize,
    mu_target: f64,
    l_target: f64,
) -> Result<Problem<T>, ProblemError> {
    let parts = generate_parts(seed, m, n, mu_target, l_target)?;
    let components = parts
        .hessians
        .into_iter()
        .zip(parts.linears)
        .map(|(a, b)| {
            let c = QuadraticComponent::new(
                a.transpose().iter().map(|&v| T::lit(v)).collect(),
                b.iter().map(|&v| T::lit(v)).collect(),
                T::zero(),
            )?;
            Ok(Box::new(c) as Box<dyn Component<T>>)
        })
        .collect::<Result<Vec<_>, ProblemError>>()?;

    Problem::new(
        components,
        T::lit(mu_target),
        parts.x_star.iter().map(|&v| T::lit(v)).collect(),
    )
}

struct QuadraticParts {
    hessians: Vec<DMatrix<f64>>,
    linears: Vec<DVector<f64>>,
    x_star: DVector<f64>,
}

fn generate_parts(
    seed: u64,
    m: usize,
    n: usize,
    mu_target: f64,
    l_target: f64,
) -> Result<QuadraticParts, ProblemError> {
    if m < 1 || n < 1 {
        return Err(ProblemError::InvalidParameter(format!(
            "need m ≥ 1 and n ≥ 1, got m = {m}, n = {n}"
        )));
    }
    if !(mu_target > 0.0) || !mu_target.is_finite() {
        return Err(ProblemError::InvalidParameter(format!(
            "mu_target must be positive, got {mu_target}"
        )));
    }
    if !(l_target >= mu_target) || !l_target.is_finite() {
        return Err(ProblemError::InvalidParameter(format!(
            "L_target must be at least mu_target, got {l_target}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut spectrum = vec![mu_target; n];
    if n >= 2 {
        spectrum[n - 1] = l_target;
        for v in spectrum.iter_mut().take(n - 1).skip(1) {
            *v = rng.gen_range(mu_target..=l_target);
        }
    }
    let basis = random_orthogonal(&mut rng, n);
    let sqrt_lambda = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        spectrum.iter().map(|v| v.sqrt()),
    ));
    let s_half = symmetrize(&(&basis * sqrt_lambda * basis.transpose()));

    let hessians: Vec<DMatrix<f64>> = if m == 1 {
        vec![symmetrize(&(&s_half * &s_half))]
    } else {
        let pieces: Vec<DMatrix<f64>> = (0..m)
            .map(|_| {
                let r = random_orthogonal(&mut rng, n);
                let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.gen_range(0.0..1.0)));
                symmetrize(&(&r * d * r.transpose()))
            })
            .collect();
        let total = pieces.iter().fold(DMatrix::zeros(n, n), |acc, b| acc + b);
        let inv_sqrt = spectral_map(&total, |v| 1.0 / v.sqrt());
        pieces
            .iter()
            .map(|b| {
                let p = symmetrize(&(&inv_sqrt * b * &inv_sqrt));
                symmetrize(&(&s_half * p * &s_half))
            })
            .collect()
    };

    let linears: Vec<DVector<f64>> = (0..m)
        .map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal)))
        .collect();

    let sum_a = hessians.iter().fold(DMatrix::zeros(n, n), |acc, a| acc + a);
    let sum_b = linears.iter().fold(DVector::zeros(n), |acc, b| acc + b);
    let x_star = sum_a
        .clone()
        .cholesky()
        .ok_or_else(|| ProblemError::InvalidParameter("Hessian sum is not positive definite".into()))?
        .solve(&(-sum_b));

    Ok(QuadraticParts {
        hessians,
        linears,
        x_star,
    })
}

/// Single quadratic `½ xᵀ diag(mu, L, …, L) x` on `R^n` (`n ≥ 2`), minimized
/// at the origin. Gradient descent with stepsize `2 / (mu + L)` contracts
/// every coordinate by exactly `(Q − 1) / (Q + 1)`.
pub fn two_eigenvalue_quadratic<T: Scalar>(mu: T, l: T, n: usize) -> Result<Problem<T>, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidParameter("need n ≥ 2".into()));
    }
    let mut hessian = vec![T::zero(); n * n];
    for i in 0..n {
        hessian[i * n + i] = if i == 0 { mu } else { l };
    }
    let c = QuadraticComponent::new(hessian, vec![T::zero(); n], T::zero())?;
    Problem::new(vec![Box::new(c)], mu, vec![T::zero(); n])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Eigenvalues of `Σ A_i` recomputed from the stored components.
    fn sum_spectrum(p: &Problem<f64>) -> DVector<f64> {
        let n = p.dim();
        let mut total = DMatrix::zeros(n, n);
        for i in 0..p.len() {
            let e = p.component(i).gradient(&vec![0.0; n]);
            for j in 0..n {
                let mut unit = vec![0.0; n];
                unit[j] = 1.0;
                let col = linalg::sub(&p.component(i).gradient(&unit), &e);
                for r in 0..n {
                    total[(r, j)] += col[r];
                }
            }
        }
        symmetrize(&total).symmetric_eigen().eigenvalues
    }

    #[test]
    fn scalar_identity_case() {
        let p = make_quadratic_sum::<f64>(1, 1, 1, 1.0, 1.0).unwrap();
        let b = p.component(0).gradient(&[0.0])[0];
        assert!((p.x_star()[0] + b).abs() < 1e-15);
        assert!((p.condition() - 1.0).abs() < 1e-15);
        assert!((p.component(0).gradient(&[1.0])[0] - 1.0 - b).abs() < 1e-15);
    }

    #[test]
    fn extreme_eigenvalues_hit_targets() {
        for (seed, m, n, mu, l) in [(1, 3, 5, 1.0, 5.0), (2, 10, 20, 0.5, 50.0), (3, 2, 2, 2.0, 2.0)] {
            let p = make_quadratic_sum::<f64>(seed, m, n, mu, l).unwrap();
            let eig = sum_spectrum(&p);
            assert!((eig.min() - mu).abs() <= 1e-10 * mu, "min {}", eig.min());
            assert!(eig.max() <= l * (1.0 + 1e-10));
            assert!((eig.max() - l).abs() <= 1e-10 * l);
            for c in p.components() {
                assert!(c.lipschitz() >= 0.0);
            }
        }
    }

    #[test]
    fn optimum_is_stationary() {
        let p = make_quadratic_sum::<f64>(8, 6, 7, 1.0, 50.0).unwrap();
        let b = p.full_gradient(&vec![0.0; 7]).unwrap();
        let g = p.full_gradient(p.x_star()).unwrap();
        assert!(linalg::norm(&g) <= 1e-10 * linalg::norm(&b));
        assert!(linalg::norm(&g) <= crate::problems::OPTIMUM_TOLERANCE);
    }

    #[test]
    fn full_gradient_matches_matrix_oracle() {
        let parts = generate_parts(21, 4, 5, 1.0, 9.0).unwrap();
        let p = make_quadratic_sum::<f64>(21, 4, 5, 1.0, 9.0).unwrap();
        let x = DVector::from_column_slice(&[0.4, -2.0, 1.5, 0.0, 3.0]);
        let sum_a = parts.hessians.iter().fold(DMatrix::zeros(5, 5), |acc, a| acc + a);
        let sum_b = parts.linears.iter().fold(DVector::zeros(5), |acc, b| acc + b);
        let expected = sum_a * &x + sum_b;
        let got = p.full_gradient(x.as_slice()).unwrap();
        assert!(linalg::dist(&got, expected.as_slice()) <= 1e-12 * expected.norm());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = make_quadratic_sum::<f64>(3, 3, 4, 1.0, 7.0).unwrap();
        let b = make_quadratic_sum::<f64>(3, 3, 4, 1.0, 7.0).unwrap();
        assert_eq!(a.x_star(), b.x_star());
        assert_eq!(a.lipschitz(), b.lipschitz());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_quadratic_sum::<f64>(0, 0, 3, 1.0, 2.0).is_err());
        assert!(make_quadratic_sum::<f64>(0, 2, 0, 1.0, 2.0).is_err());
        assert!(make_quadratic_sum::<f64>(0, 2, 3, 0.0, 2.0).is_err());
        assert!(make_quadratic_sum::<f64>(0, 2, 3, 2.0, 1.0).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let p = make_quadratic_sum::<f32>(4, 3, 3, 1.0, 4.0).unwrap();
        let g = p.full_gradient(p.x_star()).unwrap();
        assert!(linalg::norm(&g) < 1e-4);
    }
}
