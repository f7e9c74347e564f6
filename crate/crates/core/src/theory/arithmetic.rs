//! Consistency checks among the certificate constants, meant to be
//! evaluated in exact arithmetic.
//!
//! The perturbation term is passed in so that a faulty implementation can
//! be substituted and shown to be caught.

use super::constants::{self, Field};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithmeticCheck {
    pub name: &'static str,
    /// `None` when the inequality's hypothesis (e.g. `γ ≤ γ̄`) is not met.
    pub holds: Option<bool>,
}

impl ArithmeticCheck {
    fn always(name: &'static str, holds: bool) -> Self {
        Self { name, holds: Some(holds) }
    }

    fn when(name: &'static str, applicable: bool, holds: impl FnOnce() -> bool) -> Self {
        Self {
            name,
            holds: applicable.then(holds),
        }
    }
}

fn int<R: Field>(v: usize) -> R {
    R::from_usize(v).expect("integer embeds in field")
}

/// Checks, at `(mu, L, K)` and stepsize `gamma`:
/// - the threshold `mu/(3LK(mu+L))` equals `(25/24) γ̄`, and `γ* = γ̄/2`;
/// - `1/(9K(Q+1)²) ≤ 1/36` and, for `γ ≤ γ̄`, `γ²L²K ≤ 1/(9K(Q+1)²)`;
/// - `q(γ) = 3d(2 + 3d)` with `d = γ²L²K`, `q ≥ 6d`, and `q ≤ (25/4)d` for `γ ≤ γ̄`;
/// - `p + 6d < 1` below the threshold;
/// - `s(γ*) ≤ 1 − 4/(25K(Q+1)²)`.
pub fn certificate_arithmetic<R: Field>(
    mu: R,
    l: R,
    k: usize,
    gamma: R,
    q_fn: impl Fn(R, R, usize) -> R,
) -> Vec<ArithmeticCheck> {
    let q_cond = l.clone() / mu.clone();
    let gamma_bar = constants::gamma_bar(mu.clone(), l.clone(), k);
    let gamma_star = constants::gamma_star(mu.clone(), l.clone(), k);
    let threshold = constants::quadratic_term_threshold(mu.clone(), l.clone(), k);
    let d = constants::delay_product(gamma.clone(), l.clone(), k);
    let d_bound = constants::delay_product_bound(k, q_cond.clone());
    let q = q_fn(gamma.clone(), l.clone(), k);
    let three = int::<R>(3);
    let below_bar = gamma <= gamma_bar;

    let star_q = q_fn(gamma_star.clone(), l.clone(), k);
    let star_s = constants::contraction_p(gamma_star.clone(), mu.clone(), l.clone()) + star_q;

    vec![
        ArithmeticCheck::always(
            "threshold_is_25_24_gamma_bar",
            threshold.clone() == int::<R>(25) / int::<R>(24) * gamma_bar.clone(),
        ),
        ArithmeticCheck::always("gamma_star_is_half_gamma_bar", gamma_star.clone() * int(2) == gamma_bar),
        ArithmeticCheck::always("delay_product_bound_below_1_36", d_bound <= R::one() / int::<R>(36)),
        ArithmeticCheck::when("delay_product_bound", below_bar, || d <= d_bound),
        ArithmeticCheck::always(
            "q_factored_form",
            q == three.clone() * d.clone() * (int::<R>(2) + three * d.clone()),
        ),
        ArithmeticCheck::always("q_at_least_6d", q >= int::<R>(6) * d.clone()),
        ArithmeticCheck::when("q_at_most_25_4_d", below_bar, || {
            q <= constants::perturbation_q_bound(gamma.clone(), l.clone(), k)
        }),
        ArithmeticCheck::when("p_plus_6d_below_one", gamma < threshold, || {
            constants::contraction_p(gamma.clone(), mu.clone(), l.clone()) + int::<R>(6) * d.clone() < R::one()
        }),
        ArithmeticCheck::always("s_star_bound", star_s <= constants::s_star_bound(k, q_cond)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn all_hold_on_a_grid() {
        for k in 1..=6 {
            for (mn, md) in [(1, 1), (1, 3), (2, 7)] {
                for lq in [1, 2, 10, 100] {
                    let mu = r(mn, md);
                    let l = mu.clone() * r(lq, 1);
                    let bar = constants::gamma_bar(mu.clone(), l.clone(), k);
                    for t in [r(1, 100), r(1, 2), r(99, 100), r(1, 1), r(3, 2)] {
                        let checks =
                            certificate_arithmetic(mu.clone(), l.clone(), k, bar.clone() * t, constants::perturbation_q);
                        assert!(checks.iter().all(|c| c.holds != Some(false)), "{checks:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hypotheses_gate_applicability() {
        let checks = certificate_arithmetic(r(1, 1), r(1, 1), 1, r(1, 2), constants::perturbation_q);
        let gated: Vec<_> = checks.iter().filter(|c| c.holds.is_none()).map(|c| c.name).collect();
        assert_eq!(gated, ["delay_product_bound", "q_at_most_25_4_d", "p_plus_6d_below_one"]);
    }

    #[test]
    fn sign_error_in_q_is_caught() {
        let bad = |g: BigRational, l: BigRational, k: usize| {
            let d = constants::delay_product(g, l, k);
            r(9, 1) * d.clone() * d.clone() - r(6, 1) * d
        };
        let checks = certificate_arithmetic(r(1, 1), r(1, 1), 1, r(2, 25), bad);
        let failed: Vec<_> = checks.iter().filter(|c| c.holds == Some(false)).map(|c| c.name).collect();
        assert!(failed.contains(&"q_factored_form") && failed.contains(&"q_at_least_6d"), "{failed:?}");
    }
}
