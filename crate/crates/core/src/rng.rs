//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), a
//! portable counter-based generator: a `(seed, stream)` pair gives the same
//! sequence on every platform. Restarts, chains and replicates each get
//! their own stream of the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw from `Dirichlet(alpha)`.
///
/// Gamma variates are drawn on the log scale using
/// `Gamma(a) = Gamma(a + 1) * U^(1/a)` so that shapes far below one do not
/// underflow to an all-zero vector.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let mut logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let g = Gamma::new(a + 1.0, 1.0).expect("positive shape");
            let u: f64 = rng.random::<f64>();
            // random::<f64>() is in [0, 1); 1 - u is in (0, 1].
            g.sample(rng).ln() + (1.0 - u).ln() / a
        })
        .collect();
    crate::special::softmax_in_place(&mut logs);
    logs
}

/// Uniform index in `0..n` weighted by `weights` (need not be normalized).
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave u marginally above the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream(7, 0).random();
        let b: u64 = stream(7, 1).random();
        let c: u64 = stream(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn dirichlet_small_shape_is_simplex() {
        let mut rng = seeded(1);
        for _ in 0..1000 {
            let v = dirichlet(&mut rng, &[0.001, 0.001, 0.001]);
            let s: f64 = v.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = seeded(2);
        let alpha = [0.3, 0.7];
        let n = 20_000;
        let m: f64 = (0..n).map(|_| dirichlet(&mut rng, &alpha)[0]).sum::<f64>() / n as f64;
        // sd of a Beta(0.3, 0.7) draw is sqrt(0.21 / 2) ~ 0.324
        assert!((m - 0.3).abs() < 4.0 * 0.324 / (n as f64).sqrt());
    }

    #[test]
    fn categorical_never_picks_zero_weight() {
        let mut rng = seeded(3);
        for _ in 0..1000 {
            let i = categorical(&mut rng, &[0.0, 1.0, 0.0, 2.0]);
            assert!(i == 1 || i == 3);
        }
    }
}
