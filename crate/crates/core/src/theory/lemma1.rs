use super::{TheoryError, CHECK_SLACK};
use crate::scalar::Scalar;

/// Rate `(p + q)^{1/(1 + d_max)}` of a nonnegative sequence obeying
/// `V_{k+1} ≤ p V_k + q max_{(k − d(k))₊ ≤ ℓ ≤ k} V_ℓ` with `d(k) ≤ d_max`.
pub fn lemma1_rate<T: Scalar>(p: T, q: T, d_max: usize) -> Result<T, TheoryError> {
    if !(p >= T::zero()) || !(q >= T::zero()) {
        return Err(TheoryError::InvalidInput("p and q must be nonnegative".into()));
    }
    let s = p + q;
    if !(s < T::one()) {
        return Err(TheoryError::LemmaInapplicable(s.as_f64()));
    }
    Ok(s.powf(T::one() / T::from_usize_lossy(d_max + 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma1Verdict {
    Holds,
    /// The sequence itself breaks the recursive hypothesis at step `k → k+1`.
    HypothesisViolated { k: usize },
    /// Hypothesis holds but `V_k ≤ r^k V_0` fails at `k`.
    ConclusionViolated { k: usize },
}

/// Checks the lemma's hypothesis along `v`, then its conclusion for all
/// `k ≥ 0`, each with relative slack [`CHECK_SLACK`].
pub fn lemma1_check<T: Scalar>(
    v: &[T],
    p: T,
    q: T,
    delay: impl Fn(usize) -> usize,
    d_max: usize,
) -> Result<Lemma1Verdict, TheoryError> {
    if v.len() < 2 {
        return Err(TheoryError::InvalidInput("need at least two terms".into()));
    }
    if v.iter().any(|&x| !(x >= T::zero())) {
        return Err(TheoryError::InvalidInput("sequence must be nonnegative".into()));
    }
    let slack = T::one() + T::lit(CHECK_SLACK);
    for k in 0..v.len() - 1 {
        let d = delay(k);
        if d > d_max {
            return Err(TheoryError::InvalidInput(format!("delay {d} at k = {k} exceeds d_max")));
        }
        let window = v[k.saturating_sub(d)..=k]
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x));
        if v[k + 1] > (p * v[k] + q * window) * slack {
            return Ok(Lemma1Verdict::HypothesisViolated { k });
        }
    }
    let r = lemma1_rate(p, q, d_max)?;
    let mut power = T::one();
    for (k, &vk) in v.iter().enumerate() {
        if vk > power * v[0] * slack {
            return Ok(Lemma1Verdict::ConclusionViolated { k });
        }
        power = power * r;
    }
    Ok(Lemma1Verdict::Holds)
}
