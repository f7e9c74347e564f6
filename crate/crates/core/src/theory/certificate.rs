use serde::{Deserialize, Serialize};

use super::{constants, TheoryError};
use crate::scalar::Scalar;

/// Constants of the IAG linear-rate guarantee for given `(mu, L, K)`,
/// with the proof quantities `p, q, s, ρ` evaluated at `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate<T: Scalar> {
    pub mu: T,
    #[serde(rename = "L")]
    pub l: T,
    #[serde(rename = "Q")]
    pub q_cond: T,
    #[serde(rename = "K")]
    pub k: usize,
    pub gamma: T,
    pub gamma_bar: T,
    pub gamma_star: T,
    #[serde(rename = "c_K")]
    pub c_k: T,
    /// `1 − c_K / (Q + 1)²`
    pub per_step_bound: T,
    pub p: T,
    pub q: T,
    pub s: T,
    /// `s^{1/(2K+1)}` when `s < 1`.
    pub rho: Option<T>,
    /// `γ < γ̄`: linear convergence is guaranteed.
    pub linear_convergence_guaranteed: bool,
    pub s_below_one: bool,
}

impl<T: Scalar> RateCertificate<T> {
    /// Rate `ρ^{1/2}` of `dist_k` implied by the perturbed-decay lemma.
    pub fn distance_rate(&self) -> Option<T> {
        self.rho.map(|r| r.sqrt())
    }

    pub fn at_gamma_star(&self) -> bool {
        (self.gamma - self.gamma_star).abs() <= T::lit(1e-12) * self.gamma_star
    }
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<(), TheoryError> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(TheoryError::InvalidInput(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Builds the certificate for delay bound `k ≥ 1`; `gamma` defaults to `γ*`.
pub fn certificate<T: Scalar>(
    mu: T,
    l: T,
    k: usize,
    gamma: Option<T>,
) -> Result<RateCertificate<T>, TheoryError> {
    positive("mu", mu)?;
    positive("L", l)?;
    if l < mu {
        return Err(TheoryError::InvalidInput(format!("L = {l} is below mu = {mu}")));
    }
    if k == 0 {
        return Err(TheoryError::ZeroDelay);
    }
    let gamma_star = constants::gamma_star(mu, l, k);
    let gamma = gamma.unwrap_or(gamma_star);
    positive("gamma", gamma)?;
    let q_cond = l / mu;
    let gamma_bar = constants::gamma_bar(mu, l, k);
    let p = constants::contraction_p(gamma, mu, l);
    let q = constants::perturbation_q(gamma, l, k);
    let s = p + q;
    let s_below_one = s < T::one();
    let rho = (s_below_one && s >= T::zero())
        .then(|| s.powf(T::one() / T::from_usize_lossy(2 * k + 1)));
    Ok(RateCertificate {
        mu,
        l,
        q_cond,
        k,
        gamma,
        gamma_bar,
        gamma_star,
        c_k: constants::c_k(k),
        per_step_bound: constants::per_step_bound(k, q_cond),
        p,
        q,
        s,
        rho,
        linear_convergence_guaranteed: gamma < gamma_bar,
        s_below_one,
    })
}

/// Gradient descent at stepsize `2 / (mu + L)` contracts by `(Q − 1)/(Q + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdCertificate<T: Scalar> {
    pub per_step_rate: T,
    pub stepsize: T,
}

pub fn gd_certificate<T: Scalar>(mu: T, l: T) -> Result<GdCertificate<T>, TheoryError> {
    positive("mu", mu)?;
    if !(l >= mu) || !l.is_finite() {
        return Err(TheoryError::InvalidInput(format!("L = {l} is below mu = {mu}")));
    }
    Ok(GdCertificate {
        per_step_rate: constants::gd_rate(l / mu),
        stepsize: T::lit(2.0) / (mu + l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_case() {
        let c = certificate(1.0, 1.0, 1, None).unwrap();
        assert_relative_eq!(c.gamma_bar, 0.16, max_relative = 1e-15);
        assert_relative_eq!(c.gamma_star, 0.08, max_relative = 1e-15);
        assert_relative_eq!(c.c_k, 2.0 / 75.0, max_relative = 1e-15);
        assert_relative_eq!(c.per_step_bound, 1.0 - 1.0 / 150.0, max_relative = 1e-15);
        assert_relative_eq!(c.p, 0.92, max_relative = 1e-15);
        assert_relative_eq!(c.q, 0.03876864, max_relative = 1e-13);
        assert!(c.s_below_one && c.linear_convergence_guaranteed);
        assert!(c.at_gamma_star());
        assert!(c.distance_rate().unwrap() <= c.per_step_bound);
    }

    #[test]
    fn flags_large_steps() {
        let c = certificate(1.0, 10.0, 4, Some(0.1)).unwrap();
        assert!(!c.linear_convergence_guaranteed);
        assert!(!c.at_gamma_star());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(certificate(1.0, 1.0, 0, None), Err(TheoryError::ZeroDelay));
        assert!(certificate(0.0, 1.0, 1, None).is_err());
        assert!(certificate(2.0, 1.0, 1, None).is_err());
        assert!(certificate(1.0, 1.0, 1, Some(-1.0)).is_err());
        assert!(gd_certificate(-1.0, 1.0).is_err());
    }

    #[test]
    fn gd_rates() {
        assert_eq!(gd_certificate(2.0, 2.0).unwrap().per_step_rate, 0.0);
        assert_relative_eq!(gd_certificate(1.0, 3.0).unwrap().per_step_rate, 0.5);
        let g = gd_certificate(1.0, 10.0).unwrap();
        assert_relative_eq!(g.per_step_rate, 9.0 / 11.0);
        assert_relative_eq!(g.stepsize, 2.0 / 11.0);
    }

    #[test]
    fn monotone_in_k_and_l() {
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let c = certificate(1.0, 5.0, k, None).unwrap();
            assert!(c.gamma_bar < prev);
            prev = c.gamma_bar;
        }
        let mut prev = (f64::INFINITY, 0.0);
        for l in [1.0, 2.0, 5.0, 10.0, 100.0] {
            let c = certificate(1.0, l, 3, None).unwrap();
            assert!(c.gamma_bar < prev.0);
            assert!(c.per_step_bound > prev.1);
            prev = (c.gamma_bar, c.per_step_bound);
        }
    }

    #[test]
    fn rate_relaxation_on_grid() {
        for mu in [0.1, 1.0, 3.0] {
            for ratio in [1.0, 2.0, 10.0, 100.0] {
                for k in 1..=12 {
                    let c = certificate(mu, mu * ratio, k, None).unwrap();
                    assert!(c.s <= constants::s_star_bound(k, c.q_cond) * (1.0 + 1e-15));
                    assert!(c.distance_rate().unwrap() <= c.per_step_bound * (1.0 + 1e-15));
                    assert!(c.per_step_bound > 0.0 && c.per_step_bound < 1.0);
                }
            }
        }
    }
}
