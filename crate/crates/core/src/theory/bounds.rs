//! Gradient-error bounds and trace-level inequality checks.
//!
//! Distance windows reaching below iteration 0 use `dist_0`, consistent with
//! `x^ℓ = x^0` for `ℓ ≤ 0`.

use super::{RateCertificate, TheoryError, Verdict, CHECK_SLACK};
use crate::scalar::Scalar;
use crate::solvers::Trace;

/// Absolute slack on gradient-error comparisons.
pub const ERROR_BOUND_ABS_SLACK: f64 = 1e-9;

/// `max dist_ℓ` over `lo ≤ ℓ ≤ hi`, clamping negative indices to 0.
fn window_max<T: Scalar>(dist: &[T], lo: isize, hi: usize) -> Result<T, TheoryError> {
    if hi >= dist.len() {
        return Err(TheoryError::WindowUnavailable {
            needed: hi,
            available: dist.len(),
        });
    }
    let lo = lo.max(0) as usize;
    Ok(dist[lo..=hi].iter().fold(T::zero(), |acc, &d| acc.max(d)))
}

/// `3γL²K · max_{(k−2K)₊ ≤ ℓ ≤ k−1} dist_ℓ`; zero at `k = 0`.
pub fn iag_error_bound_rhs<T: Scalar>(
    dist: &[T],
    k: usize,
    gamma: T,
    l: T,
    delay: usize,
) -> Result<T, TheoryError> {
    if k == 0 {
        return Ok(T::zero());
    }
    let window = window_max(dist, k as isize - 2 * delay as isize, k - 1)?;
    Ok(T::lit(3.0) * gamma * l * l * T::from_usize_lossy(delay) * window)
}

/// `(3γL²K + βLK(3γL + 2β)) · max_{(k−2K−1)₊ ≤ ℓ ≤ k−1} dist_ℓ`; zero at `k = 0`.
pub fn iagm_error_bound_rhs<T: Scalar>(
    dist: &[T],
    k: usize,
    gamma: T,
    beta: T,
    l: T,
    delay: usize,
) -> Result<T, TheoryError> {
    if k == 0 {
        return Ok(T::zero());
    }
    let window = window_max(dist, k as isize - 2 * delay as isize - 1, k - 1)?;
    let kk = T::from_usize_lossy(delay);
    let three = T::lit(3.0);
    let coeff = three * gamma * l * l * kk + beta * l * kk * (three * gamma * l + beta + beta);
    Ok(coeff * window)
}

/// `2L · max_{(k−K)₊ ≤ ℓ ≤ k} dist_ℓ`.
pub fn simple_error_bound_rhs<T: Scalar>(dist: &[T], k: usize, l: T, delay: usize) -> Result<T, TheoryError> {
    let window = window_max(dist, k as isize - delay as isize, k)?;
    Ok((l + l) * window)
}

/// Checks `‖e^k‖ ≤ rhs(dists, k) + 1e-9` at every recorded `k`.
pub fn error_bound_check<T: Scalar>(
    trace: &Trace<T>,
    rhs: impl Fn(&[T], usize) -> Result<T, TheoryError>,
) -> Result<Verdict, TheoryError> {
    let dists = trace.dists();
    let slack = T::lit(ERROR_BOUND_ABS_SLACK);
    for row in &trace.rows {
        let err = row.err_norm.ok_or_else(|| {
            TheoryError::InvalidInput(format!("{} traces carry no gradient error", trace.method))
        })?;
        if err > rhs(&dists, row.k)? + slack {
            return Ok(Verdict::Violated { k: row.k });
        }
    }
    Ok(Verdict::Holds)
}

/// Checks the explicit rate at `γ*`:
/// `dist_k ≤ b^k dist_0` and `f(x^k) − f* ≤ (L/2) b^{2k} dist_0²` with
/// `b = 1 − c_K/(Q+1)²`, both with relative slack.
pub fn theorem1_check<T: Scalar>(
    trace: &Trace<T>,
    cert: &RateCertificate<T>,
    dist0: T,
) -> Result<Verdict, TheoryError> {
    if (trace.gamma - cert.gamma_star).abs() > T::lit(1e-12) * cert.gamma_star {
        return Err(TheoryError::WrongStepsize {
            expected: cert.gamma_star.as_f64(),
            actual: trace.gamma.as_f64(),
        });
    }
    if trace.delay_bound != cert.k {
        return Err(TheoryError::InvalidInput(format!(
            "trace delay bound {} differs from certificate K = {}",
            trace.delay_bound, cert.k
        )));
    }
    let slack = T::one() + T::lit(CHECK_SLACK);
    let half_l = cert.l * T::lit(0.5);
    let mut power = T::one();
    let mut k_prev = 0;
    for row in &trace.rows {
        power = power * cert.per_step_bound.powi((row.k - k_prev) as i32);
        k_prev = row.k;
        let dist_bound = power * dist0;
        if row.dist > dist_bound * slack || row.cost_gap > half_l * dist_bound * dist_bound * slack {
            return Ok(Verdict::Violated { k: row.k });
        }
    }
    Ok(Verdict::Holds)
}

/// Weaker guarantee for any `γ` with `s(γ) < 1`:
/// `dist_k² ≤ ρ(γ)^k dist_0²`.
pub fn rate_bound_check<T: Scalar>(trace: &Trace<T>, cert: &RateCertificate<T>) -> Result<Verdict, TheoryError> {
    let rho = cert.rho.ok_or_else(|| {
        TheoryError::InvalidInput(format!("s(γ) = {} is not below 1", cert.s))
    })?;
    if (trace.gamma - cert.gamma).abs() > T::lit(1e-12) * cert.gamma {
        return Err(TheoryError::WrongStepsize {
            expected: cert.gamma.as_f64(),
            actual: trace.gamma.as_f64(),
        });
    }
    let slack = T::one() + T::lit(CHECK_SLACK);
    let d0 = trace.rows[0].dist;
    let mut power = T::one();
    for (idx, row) in trace.rows.iter().enumerate() {
        if idx > 0 {
            power = power * rho;
        }
        if row.dist * row.dist > power * d0 * d0 * slack {
            return Ok(Verdict::Violated { k: row.k });
        }
    }
    Ok(Verdict::Holds)
}

/// Per-step check `dist_{k+1} ≤ (rate + 1e-10) dist_k + abs_floor`.
pub fn gd_contraction_check<T: Scalar>(dists: &[T], rate: T, abs_floor: T) -> Verdict {
    let factor = rate + T::lit(1e-10);
    dists
        .windows(2)
        .position(|w| w[1] > factor * w[0] + abs_floor)
        .map_or(Verdict::Holds, |i| Verdict::Violated { k: i + 1 })
}

/// Empirical geometric rate: `exp` of the least-squares slope of
/// `log dist_k` against `k`, after discarding the leading `burn_in`
/// fraction. Zero distances are skipped; an all-zero tail has rate 0.
pub fn observed_rate<T: Scalar>(dists: &[T], burn_in: f64) -> Result<T, TheoryError> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(TheoryError::InvalidInput(format!("burn-in fraction {burn_in} not in [0, 1)")));
    }
    let start = (burn_in * dists.len() as f64).floor() as usize;
    let tail = &dists[start.min(dists.len())..];
    if !tail.is_empty() && tail.iter().all(|&d| d == T::zero()) {
        return Ok(T::zero());
    }
    let points: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > T::zero() && d.is_finite())
        .map(|(i, &d)| ((start + i) as f64, d.as_f64().ln()))
        .collect();
    if points.len() < 10 {
        return Err(TheoryError::Degenerate(format!(
            "{} positive distances after burn-in, need 10",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(k, y)| {
        let dk = k - mean_k;
        (sxy + dk * (y - mean_y), sxx + dk * dk)
    });
    Ok(T::lit((sxy / sxx).exp()))
}
