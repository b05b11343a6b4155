//! Special functions used by the likelihoods and the variational bound.

use crate::{Error, Result};

/// Digamma function `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
///
/// Shifts the argument above 10 with `psi(x) = psi(x + 1) - 1/x`, then uses
/// the asymptotic expansion in `1/x^2` through the `x^-14` term.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

#[inline]
pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_2n / (2n).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln sum exp(v)` without overflow. Returns `-inf` for an empty or all
/// `-inf` input.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// In-place softmax of log weights.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// Log density of a Dirichlet distribution with parameter `alpha` at `x`.
/// A zero coordinate with `alpha < 1` gives `+inf`; with `alpha > 1`, `-inf`.
pub fn ln_dirichlet_pdf(x: &[f64], alpha: &[f64]) -> f64 {
    if x.len() == 1 {
        return 0.0;
    }
    let a0: f64 = alpha.iter().sum();
    let norm = ln_gamma(a0) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    norm + x
        .iter()
        .zip(alpha)
        .map(|(&xi, &a)| if a == 1.0 { 0.0 } else { (a - 1.0) * xi.ln() })
        .sum::<f64>()
}

/// Log probability of a sequence of categorical draws with per-category
/// `counts` after integrating a `Dirichlet(alpha)` prior.
pub fn ln_dirichlet_multinomial(counts: &[u32], alpha: &[f64]) -> f64 {
    let a0: f64 = alpha.iter().sum();
    let n: u32 = counts.iter().sum();
    let mut v = ln_gamma(a0) - ln_gamma(a0 + n as f64);
    for (&c, &a) in counts.iter().zip(alpha) {
        if c > 0 {
            v += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_closed_forms() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-12);
        assert_abs_diff_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        // psi(n) = -gamma + H_{n-1}
        let mut h = 0.0;
        for n in 1..40 {
            assert_abs_diff_eq!(digamma(n as f64).unwrap(), -EULER_GAMMA + h, epsilon = 1e-12);
            h += 1.0 / n as f64;
        }
    }

    #[test]
    fn digamma_recurrence() {
        assert_abs_diff_eq!(
            digamma(2.0).unwrap(),
            digamma(1.0).unwrap() + 1.0,
            epsilon = 1e-14
        );
        for &x in &[0.01, 0.3, 1.7, 9.99, 10.0, 55.5] {
            assert_abs_diff_eq!(
                digamma(x + 1.0).unwrap(),
                digamma(x).unwrap() + 1.0 / x,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn digamma_matches_reference_implementation() {
        let mut x = 1e-3;
        while x < 1e4 {
            let r = statrs::function::gamma::digamma(x);
            assert!((digamma(x).unwrap() - r).abs() < 1e-10 * r.abs().max(1.0), "x = {x}");
            x *= 1.37;
        }
    }

    #[test]
    fn digamma_domain() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn dirichlet_multinomial_two_categories() {
        // Beta-binomial sequence probability with alpha = (1, 1):
        // one specific sequence with 2 of category 0 and 1 of category 1
        // has probability 2! 1! / 4! * 1! ... = 1/12.
        let v = ln_dirichlet_multinomial(&[2, 1], &[1.0, 1.0]);
        assert_abs_diff_eq!(v.exp(), 1.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn log_sum_exp_stable() {
        assert_abs_diff_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln(), epsilon = 1e-9);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
