use super::SolverError;
use crate::linalg;
use crate::problems::Problem;
use crate::scalar::Scalar;

fn check_index<T: Scalar>(problem: &Problem<T>, i: usize) -> Result<(), SolverError> {
    if i >= problem.len() {
        return Err(SolverError::IndexOutOfRange {
            index: i,
            components: problem.len(),
        });
    }
    Ok(())
}

/// Incremental gradient step on component `i` (zero-based): `x − γ ∇f_i(x)`.
pub fn ig_step<T: Scalar>(
    x: &[T],
    problem: &Problem<T>,
    gamma: T,
    i: usize,
) -> Result<Vec<T>, SolverError> {
    check_index(problem, i)?;
    problem.check_dim(x)?;
    let mut next = x.to_vec();
    let g = problem.component(i).gradient(x);
    linalg::axpy(-gamma, &g, &mut next);
    Ok(next)
}

/// Inner step of IG with momentum:
/// `x − γ ∇f_i(x) + β (outer − outer_prev)`, where `outer` and `outer_prev`
/// are the iterates at the last two cycle boundaries.
pub fn igm_step<T: Scalar>(
    x: &[T],
    outer: &[T],
    outer_prev: &[T],
    problem: &Problem<T>,
    gamma: T,
    beta: T,
    i: usize,
) -> Result<Vec<T>, SolverError> {
    let mut next = ig_step(x, problem, gamma, i)?;
    problem.check_dim(outer)?;
    problem.check_dim(outer_prev)?;
    if beta != T::zero() {
        for ((n, &o), &op) in next.iter_mut().zip(outer).zip(outer_prev) {
            *n = *n + beta * (o - op);
        }
    }
    Ok(next)
}
