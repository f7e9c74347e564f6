use super::{Component, Dataset, Problem, ProblemError};
use crate::linalg;
use crate::scalar::Scalar;

/// Logistic loss over a contiguous block of samples plus an even share of
/// the ℓ2 penalty:
/// `f_i(x) = Σ_j log(1 + exp(−y_j ⟨a_j, x⟩)) + (reg / 2) ‖x‖²`.
#[derive(Debug, Clone)]
pub struct LogisticBlock<T: Scalar> {
    dim: usize,
    rows: Vec<T>,
    labels: Vec<T>,
    reg: T,
    lipschitz: T,
}

impl<T: Scalar> LogisticBlock<T> {
    /// `rows` is row-major with `labels.len()` rows of length `dim`.
    /// `L_i = ¼ Σ_j ‖a_j‖² + reg`, the trace bound on the block Hessian.
    pub fn new(dim: usize, rows: Vec<T>, labels: Vec<T>, reg: T) -> Self {
        debug_assert_eq!(rows.len(), dim * labels.len());
        let sq: T = rows.iter().map(|&v| v * v).sum();
        let lipschitz = T::lit(0.25) * sq + reg;
        Self {
            dim,
            rows,
            labels,
            reg,
            lipschitz,
        }
    }

    fn margins(&self, x: &[T]) -> impl Iterator<Item = (&[T], T)> + '_ {
        let x = x.to_vec();
        self.rows
            .chunks_exact(self.dim)
            .zip(&self.labels)
            .map(move |(a, &y)| (a, -y * linalg::dot(a, &x)))
    }
}

fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Component<T> for LogisticBlock<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        let loss = self.margins(x).fold(T::zero(), |acc, (_, z)| acc + softplus(z));
        loss + T::lit(0.5) * self.reg * linalg::dot(x, x)
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.reg * xi;
        }
        for ((a, z), &y) in self.margins(x).zip(&self.labels) {
            linalg::axpy(-y * sigmoid(z), a, out);
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }
}

/// ℓ2-regularized logistic regression split into `m` contiguous sample
/// blocks. `mu = lambda`; the optimum comes from the reference solve.
pub fn make_logistic_l2<T: Scalar>(
    data: &Dataset<T>,
    lambda: T,
    m: usize,
) -> Result<Problem<T>, ProblemError> {
    if !(lambda > T::zero()) {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if m < 1 {
        return Err(ProblemError::InvalidParameter("m must be positive".into()));
    }
    let n = data.n_features();
    let total = data.len();
    if let Some((row, &value)) = data
        .labels()
        .iter()
        .enumerate()
        .find(|(_, &y)| y != T::one() && y != -T::one())
    {
        return Err(ProblemError::InvalidLabel {
            row,
            value: value.as_f64(),
        });
    }
    let reg = lambda / T::from_usize_lossy(m);
    let (base, extra) = (total / m, total % m);
    let mut start = 0;
    let mut components: Vec<Box<dyn Component<T>>> = Vec::with_capacity(m);
    for block in 0..m {
        let size = base + usize::from(block < extra);
        if size == 0 {
            return Err(ProblemError::EmptyBlock(block));
        }
        let end = start + size;
        components.push(Box::new(LogisticBlock::new(
            n,
            data.features()[start * n..end * n].to_vec(),
            data.labels()[start..end].to_vec(),
            reg,
        )));
        start = end;
    }
    Problem::with_reference_optimum(components, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_features_give_zero_optimum() {
        let data = Dataset::new(3, vec![0.0; 12], vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        let p = make_logistic_l2(&data, 1.0, 2).unwrap();
        assert!(p.x_star().iter().all(|&v| v == 0.0));
        assert!((p.f_star() - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(p.mu(), 1.0);
    }

    #[test]
    fn untouched_coordinates_stay_zero() {
        let data = Dataset::new(3, vec![1.0, 0.0, 0.0], vec![1.0]).unwrap();
        let p = make_logistic_l2(&data, 1.0, 1).unwrap();
        assert!(p.x_star()[0] > 0.0);
        assert_eq!(p.x_star()[1], 0.0);
        assert_eq!(p.x_star()[2], 0.0);
    }

    #[test]
    fn reference_optimum_is_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Dataset::random(&mut rng, 60, 5);
        let p = make_logistic_l2(&data, 0.5, 4).unwrap();
        let g = p.full_gradient(p.x_star()).unwrap();
        let scale = 1.0_f64.max(linalg::norm(p.x_star()));
        assert!(linalg::norm(&g) <= 1e-9 * scale);
        // L_i = ¼ Σ‖a_j‖² + λ/m
        let sum_sq: f64 = data.features()[..15 * 5].iter().map(|v| v * v).sum();
        assert!((p.component(0).lipschitz() - (0.25 * sum_sq + 0.125)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = Dataset::new(1, vec![1.0, 2.0], vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            make_logistic_l2(&data, 1.0, 1),
            Err(ProblemError::InvalidLabel { row: 1, .. })
        ));
        let data = Dataset::new(1, vec![1.0, 2.0], vec![1.0, -1.0]).unwrap();
        assert!(matches!(make_logistic_l2(&data, 1.0, 3), Err(ProblemError::EmptyBlock(2))));
        assert!(make_logistic_l2(&data, 0.0, 1).is_err());
    }

    #[test]
    fn stable_for_large_margins() {
        let b = LogisticBlock::<f64>::new(1, vec![1.0], vec![1.0], 0.0);
        assert!(b.value(&[-800.0]).is_finite());
        assert!((b.value(&[-800.0]) - 800.0).abs() < 1e-9);
        assert!((b.gradient(&[-800.0])[0] + 1.0).abs() < 1e-12);
    }
}
