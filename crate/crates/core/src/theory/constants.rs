//! Stepsize and rate constants as plain field arithmetic.
//!
//! Everything here is generic over [`Field`], so the same formulas evaluate
//! in `f64` for the solvers and exactly in `BigRational` for verification.
//! `K` is the delay bound, `mu` the strong convexity parameter, `l = Σ L_i`
//! and `q_cond = l / mu`.

use num_traits::{FromPrimitive, Num};

/// Ordered field with integer embedding.
pub trait Field: Num + Clone + FromPrimitive + PartialOrd {}

impl<R: Num + Clone + FromPrimitive + PartialOrd> Field for R {}

fn int<R: Field>(v: usize) -> R {
    R::from_usize(v).expect("integer embeds in field")
}

fn ratio<R: Field>(num: usize, den: usize) -> R {
    int::<R>(num) / int::<R>(den)
}

/// Stepsize threshold numerator `a = 8/25`.
pub fn threshold_numerator<R: Field>() -> R {
    ratio(8, 25)
}

/// `γ̄ = (a mu / (K l)) / (mu + l)`.
pub fn gamma_bar<R: Field>(mu: R, l: R, k: usize) -> R {
    threshold_numerator::<R>() * mu.clone() / (int::<R>(k) * l.clone()) / (mu + l)
}

/// `γ* = γ̄ / 2`.
pub fn gamma_star<R: Field>(mu: R, l: R, k: usize) -> R {
    gamma_bar(mu, l, k) / int(2)
}

/// `c_K = (2/25) / (K (2K + 1))`.
pub fn c_k<R: Field>(k: usize) -> R {
    ratio::<R>(2, 25) / int::<R>(k * (2 * k + 1))
}

/// Guaranteed per-step distance contraction `1 − c_K / (Q + 1)²` at `γ*`.
pub fn per_step_bound<R: Field>(k: usize, q_cond: R) -> R {
    let qp1 = q_cond + R::one();
    R::one() - c_k::<R>(k) / (qp1.clone() * qp1)
}

/// `p(γ) = 1 − 2γ mu l / (mu + l)`.
pub fn contraction_p<R: Field>(gamma: R, mu: R, l: R) -> R {
    R::one() - int::<R>(2) * gamma * mu.clone() * l.clone() / (mu + l)
}

/// `γ² l² K`, the quantity the delay analysis keeps small.
pub fn delay_product<R: Field>(gamma: R, l: R, k: usize) -> R {
    let gl = gamma * l;
    gl.clone() * gl * int(k)
}

/// `q(γ) = 9γ⁴l⁴K² + 6γ²l²K`.
pub fn perturbation_q<R: Field>(gamma: R, l: R, k: usize) -> R {
    let d = delay_product(gamma, l, k);
    int::<R>(9) * d.clone() * d.clone() + int::<R>(6) * d
}

/// `s(γ) = p(γ) + q(γ)`.
pub fn s_value<R: Field>(gamma: R, mu: R, l: R, k: usize) -> R {
    contraction_p(gamma.clone(), mu, l.clone()) + perturbation_q(gamma, l, k)
}

/// Stepsize below which `p(γ) + 6γ²l²K < 1`: `(mu / (3 l K)) / (mu + l)`.
pub fn quadratic_term_threshold<R: Field>(mu: R, l: R, k: usize) -> R {
    mu.clone() / (int::<R>(3 * k) * l.clone()) / (mu + l)
}

/// `1 / (9K (Q + 1)²)`, the bound on [`delay_product`] below `γ̄`.
pub fn delay_product_bound<R: Field>(k: usize, q_cond: R) -> R {
    let qp1 = q_cond + R::one();
    R::one() / (int::<R>(9 * k) * qp1.clone() * qp1)
}

/// `(25/4) γ² l² K`, the bound on `q(γ)` below `γ̄`.
pub fn perturbation_q_bound<R: Field>(gamma: R, l: R, k: usize) -> R {
    ratio::<R>(25, 4) * delay_product(gamma, l, k)
}

/// `1 − 4 / (25K (Q + 1)²)`, the bound on `s(γ*)`.
pub fn s_star_bound<R: Field>(k: usize, q_cond: R) -> R {
    let qp1 = q_cond + R::one();
    R::one() - ratio::<R>(4, 25) / (int::<R>(k) * qp1.clone() * qp1)
}

/// Gradient descent rate `(Q − 1) / (Q + 1)` at stepsize `2 / (mu + l)`.
pub fn gd_rate<R: Field>(q_cond: R) -> R {
    (q_cond.clone() - R::one()) / (q_cond + R::one())
}
